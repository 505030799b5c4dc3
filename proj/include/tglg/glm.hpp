#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace tglg {

enum class Family { kGaussian, kBernoulliLogit };

std::string_view family_name(Family f) noexcept;
/// Accepts "gaussian" and "logit" / "bernoulli_logit" / "logistic".
Family parse_family(std::string_view name);

/// Exponential-family response model with density exp{a(h) y + b(h) + c(y)}.
///
/// Gaussian: a(h) = h / s2, b(h) = -h^2 / (2 s2), c(y) = -y^2 / (2 s2) - log(2 pi s2) / 2.
/// Logit:    a(h) = h,      b(h) = -log(1 + e^h), c(y) = 0.
struct GlmFamily {
  Family tag = Family::kGaussian;
  double noise_variance = 1.0;  ///< only meaningful for the Gaussian family

  static GlmFamily gaussian(double noise_variance = 1.0);
  static GlmFamily logit();
};

/// Observations: node covariates X (n x p), confounders Z (n x q, q may be 0)
/// and response y.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  GlmFamily family;

  Eigen::Index n() const noexcept { return y.size(); }
  Eigen::Index p() const noexcept { return x.cols(); }
  Eigen::Index q() const noexcept { return z.cols(); }

  /// Throws Error(kShape) on inconsistent row counts, Error(kNumeric) on
  /// non-finite entries and Error(kParameter) on non-binary logit responses.
  void validate() const;

  /// Dataset with n = 0 rows and p columns; its likelihood is identically 1.
  static Dataset empty(Eigen::Index p, GlmFamily family, Eigen::Index q = 0);
};

/// Overflow-safe logistic function.
double logistic(double h) noexcept;
/// log(1 + e^h) without overflow.
double log1p_exp(double h) noexcept;

double log_likelihood(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h);
/// Same, with an explicit Gaussian noise variance overriding data.family.
double log_likelihood(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h,
                      double noise_variance);

/// d log-likelihood / d h_i = a'(h_i) y_i + b'(h_i).
Eigen::VectorXd grad_h(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h);
Eigen::VectorXd grad_h(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h,
                       double noise_variance);

/// Linear predictor Z omega + X beta.
Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& z, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& omega, const Eigen::VectorXd& beta);

/// Mean response g^{-1}(Z omega + X beta). Z may have zero columns.
Eigen::VectorXd predict(const Eigen::MatrixXd& z, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& omega, const Eigen::VectorXd& beta,
                        Family family);

/// Loads X (and optionally Z) as headerless numeric CSV and y as one column.
Dataset load_dataset(const std::filesystem::path& x_path,
                     const std::optional<std::filesystem::path>& z_path,
                     const std::filesystem::path& y_path, GlmFamily family);

}  // namespace tglg
