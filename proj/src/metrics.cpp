#include "tglg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "tglg/error.hpp"

namespace tglg {

TpFp tp_fp(std::span<const std::size_t> selected, std::span<const std::size_t> truth) {
  const std::set<std::size_t> t(truth.begin(), truth.end());
  const std::set<std::size_t> s(selected.begin(), selected.end());
  TpFp out;
  for (std::size_t j : s) {
    if (t.count(j)) {
      ++out.tp;
    } else {
      ++out.fp;
    }
  }
  return out;
}

double auc(std::span<const double> scores, std::span<const std::size_t> truth) {
  const std::size_t p = scores.size();
  std::vector<char> is_true(p, 0);
  for (std::size_t j : truth) {
    if (j >= p) throw Error(ErrorCode::kParameter, "truth node out of range");
    is_true[j] = 1;
  }
  const auto n_pos = static_cast<std::size_t>(std::count(is_true.begin(), is_true.end(), 1));
  const std::size_t n_neg = p - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kUndefined, "AUC needs both true and null nodes");
  }
  // rank-sum with midranks for ties
  std::vector<std::size_t> order(p);
  for (std::size_t j = 0; j < p; ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < p;) {
    std::size_t k = i;
    while (k < p && scores[order[k]] == scores[order[i]]) ++k;
    const double mid = 0.5 * static_cast<double>(i + 1 + k);
    for (std::size_t m = i; m < k; ++m) {
      if (is_true[order[m]]) rank_sum += mid;
    }
    i = k;
  }
  const double pos = static_cast<double>(n_pos);
  const double u = rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * static_cast<double>(n_neg));
}

double pmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_pred) {
  if (y.size() != y_pred.size()) throw Error(ErrorCode::kShape, "PMSE inputs differ in length");
  if (y.size() == 0) throw Error(ErrorCode::kUndefined, "PMSE of an empty test set");
  return (y - y_pred).squaredNorm() / static_cast<double>(y.size());
}

std::size_t classification_error(const Eigen::VectorXd& y, const Eigen::VectorXd& p_pred) {
  if (y.size() != p_pred.size()) {
    throw Error(ErrorCode::kShape, "classification inputs differ in length");
  }
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double label = p_pred[i] > 0.5 ? 1.0 : 0.0;
    wrong += label != y[i];
  }
  return wrong;
}

MeanSe mean_se(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kUndefined, "no values to aggregate");
  const double r = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= r;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (r - 1.0)) / std::sqrt(r)};
}

std::vector<std::pair<std::string, MeanSe>> aggregate(std::span<const EvalReport> reports) {
  if (reports.size() < 2) throw Error(ErrorCode::kParameter, "aggregate needs at least 2 reports");
  std::vector<std::pair<std::string, MeanSe>> out;
  auto add = [&](const std::string& name, auto get) {
    std::vector<double> v;
    for (const auto& r : reports) {
      auto x = get(r);
      if (!x) return;
      v.push_back(*x);
    }
    out.emplace_back(name, mean_se(v));
  };
  add("tp", [](const EvalReport& r) { return std::optional<double>(r.tp); });
  add("fp", [](const EvalReport& r) { return std::optional<double>(r.fp); });
  add("auc", [](const EvalReport& r) { return std::optional<double>(r.auc); });
  add("pmse", [](const EvalReport& r) { return r.pmse; });
  add("ce", [](const EvalReport& r) { return r.ce; });
  return out;
}

void write_eval_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(10);
  out << "replicate,tp,fp,auc,pmse,ce\n";
  for (const auto& r : reports) {
    out << r.label << ',' << r.tp << ',' << r.fp << ',' << r.auc << ',';
    if (r.pmse) out << *r.pmse;
    out << ',';
    if (r.ce) out << *r.ce;
    out << '\n';
  }
  if (reports.size() >= 2) {
    out << "\nmetric,mean,se\n";
    for (const auto& [name, m] : aggregate(reports)) {
      out << name << ',' << m.mean << ',' << m.se << '\n';
    }
  }
}

}  // namespace tglg
