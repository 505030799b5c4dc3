#pragma once

#include <filesystem>

#include <Eigen/Dense>

namespace tglg {

/// Headerless numeric CSV (comma, tab or space separated). An empty file
/// yields a 0x0 matrix.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
void write_vector_csv(const Eigen::VectorXd& v, const std::filesystem::path& path);

}  // namespace tglg
