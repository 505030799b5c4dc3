#include "tglg/csv.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "tglg/error.hpp"

namespace tglg {

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t count = 0;
    const char* ptr = line.data();
    const char* end = line.data() + line.size();
    while (ptr < end) {
      while (ptr < end && (*ptr == ',' || *ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
      if (ptr >= end) break;
      double value = 0.0;
      auto [next, ec] = std::from_chars(ptr, end, value);
      if (ec != std::errc()) {
        throw Error(ErrorCode::kParse,
                    path.string() + " line " + std::to_string(line_no) + ": not a number");
      }
      values.push_back(value);
      ++count;
      ptr = next;
    }
    if (count == 0) continue;
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(ErrorCode::kParse, path.string() + " line " + std::to_string(line_no) +
                                         ": expected " + std::to_string(cols) +
                                         " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
    }
  }
  return out;
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
  Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.size() == 0) return Eigen::VectorXd();
  if (m.cols() != 1 && m.rows() != 1) {
    throw Error(ErrorCode::kShape, path.string() + ": expected a single column");
  }
  return m.cols() == 1 ? Eigen::VectorXd(m.col(0)) : Eigen::VectorXd(m.row(0).transpose());
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_vector_csv(const Eigen::VectorXd& v, const std::filesystem::path& path) {
  write_matrix_csv(Eigen::MatrixXd(v), path);
}

}  // namespace tglg
