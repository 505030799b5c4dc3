#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tglg {

struct TpFp {
  std::size_t tp = 0;
  std::size_t fp = 0;
};

/// Node sets are 0-based index lists; duplicates are ignored.
TpFp tp_fp(std::span<const std::size_t> selected, std::span<const std::size_t> truth);

/// Mann-Whitney AUC with ties counted 1/2. Throws Error(kUndefined) when the
/// truth set is empty or covers every node.
double auc(std::span<const double> scores, std::span<const std::size_t> truth);

double pmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_pred);

/// Number of i with I(p_i > 0.5) != y_i; p = 0.5 is classified as 0.
std::size_t classification_error(const Eigen::VectorXd& y, const Eigen::VectorXd& p_pred);

/// One replicate. pmse is set for gaussian fits, ce for logit fits.
struct EvalReport {
  std::string label;
  double tp = 0.0;
  double fp = 0.0;
  double auc = 0.0;
  std::optional<double> pmse;
  std::optional<double> ce;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and sd / sqrt(R) of each metric, keyed "tp", "fp", "auc", "pmse", "ce".
/// pmse / ce are aggregated only when present in every report.
std::vector<std::pair<std::string, MeanSe>> aggregate(std::span<const EvalReport> reports);

MeanSe mean_se(std::span<const double> values);

/// Per-replicate rows (label,tp,fp,auc,pmse,ce) followed by a metric,mean,se table.
void write_eval_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);

}  // namespace tglg
