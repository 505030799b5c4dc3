#pragma once

#include <cstdint>
#include <memory>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "tglg/graph.hpp"
#include "tglg/rng.hpp"

namespace tglg {

/// How the Laplacian ridge epsilon is handled.
///   kFixed       - epsilon held at `value`
///   kLognormal   - log(epsilon) ~ N(mu, sigma2), updated by random walk
///   kIndependent - network ignored: gamma ~ N(0, sigma2_gamma I)
enum class EpsilonMode { kFixed, kLognormal, kIndependent };

std::string_view epsilon_mode_name(EpsilonMode m) noexcept;
EpsilonMode parse_epsilon_mode(std::string_view name);

struct EpsilonPrior {
  EpsilonMode mode = EpsilonMode::kLognormal;
  double value = 1e-5;
  double mu = -5.0;
  double sigma2 = 9.0;
};

/// Hyperparameters of the thresholded graph-Laplacian Gaussian prior.
struct TglgHyper {
  double lambda_u = 10.0;
  double a_gamma = 0.01;
  double b_gamma = 0.01;
  double a_alpha = 0.01;
  double b_alpha = 0.01;
  double a_noise = 0.01;  ///< Gaussian noise variance ~ IG(a_noise, b_noise)
  double b_noise = 0.01;
  double sigma2_omega = 50.0;
  double eps0 = 1e-8;  ///< smoothing constant of the arctan threshold
  EpsilonPrior epsilon;

  /// Throws Error(kConfig) if any hyperparameter is non-positive.
  void validate() const;
};

/// Factorized gamma-prior precision Q = base + epsilon I, where base is the
/// normalized Laplacian (or the zero matrix for the network-free prior).
///
/// Q is never inverted densely; all operations go through the sparse
/// Cholesky factor P Q P^T = L L^T. Copies share the immutable factor.
class LaplacianPrecision {
 public:
  using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

  LaplacianPrecision() = default;
  /// Throws Error(kFactorization) if epsilon <= 0 or the factorization fails.
  LaplacianPrecision(const SparseMatrix& base, double epsilon);

  double epsilon() const noexcept { return epsilon_; }
  Eigen::Index size() const noexcept;
  const SparseMatrix& matrix() const;
  const SparseMatrix& base() const;
  double log_det() const noexcept { return log_det_; }

  /// Q v
  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  /// Q^{-1} b
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// v^T Q v
  double quad_form(const Eigen::VectorXd& v) const;
  /// Maps z ~ N(0, I) to x ~ N(0, Q^{-1}) via one triangular solve.
  Eigen::VectorXd whiten_inverse(const Eigen::VectorXd& z) const;
  /// L^T P v; for v ~ N(0, Q^{-1}) the result is N(0, I).
  Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;

  /// Same base matrix with a different epsilon. Refactorizes numerically but
  /// reuses the fill-reducing ordering.
  LaplacianPrecision with_epsilon(double epsilon) const;

  /// Reconstructs Q from the factor; used to check factorization accuracy.
  Eigen::MatrixXd reconstruct_dense() const;

 private:
  LaplacianPrecision(const SparseMatrix& base, double epsilon,
                     std::shared_ptr<const Permutation> perm);

  struct Factor;
  std::shared_ptr<const Factor> factor_;
  double epsilon_ = 0.0;
  double log_det_ = 0.0;
};

/// Q = L + epsilon I
LaplacianPrecision build_precision(const SparseMatrix& laplacian, double epsilon);

/// Indicator I(|gamma_j| > lambda); the boundary maps to 0.
Eigen::VectorXd hard_threshold(const Eigen::VectorXd& gamma, double lambda);

/// 1/2 {1 + (2/pi) arctan((gamma^2 - lambda^2) / eps0)}, evaluated without
/// cancellation in either tail.
double smooth_threshold(double gamma, double lambda, double eps0);

/// d/d gamma of alpha * smooth_threshold(gamma, lambda, eps0).
double smooth_threshold_grad(double alpha, double gamma, double lambda, double eps0);

enum class ThresholdMode { kHard, kSmooth };

/// beta = alpha o t_lambda(gamma). Hard mode yields exact zeros.
Eigen::VectorXd compose_beta(const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma,
                             double lambda, ThresholdMode mode = ThresholdMode::kHard,
                             double eps0 = 1e-8);

/// log N(gamma | 0, sigma2_gamma Q^{-1}).
double gamma_log_prior(const Eigen::VectorXd& gamma, double sigma2_gamma,
                       const LaplacianPrecision& prec);
/// -Q gamma / sigma2_gamma
Eigen::VectorXd gamma_log_prior_grad(const Eigen::VectorXd& gamma, double sigma2_gamma,
                                     const LaplacianPrecision& prec);

Eigen::VectorXd sample_gamma_prior(const LaplacianPrecision& prec, double sigma2_gamma,
                                   Rng& rng);
Eigen::VectorXd sample_gamma_prior(const LaplacianPrecision& prec, double sigma2_gamma,
                                   std::uint64_t seed);

/// One point of the parameter space with its derived selection and effects.
struct ModelState {
  Eigen::VectorXd omega;
  Eigen::VectorXd alpha;
  Eigen::VectorXd gamma;
  double lambda = 0.5;
  double epsilon = 1e-5;
  double sigma2_gamma = 1.0;
  double sigma2_alpha = 1.0;
  double sigma2_noise = 1.0;

  /// Derived: selected[j] == 1 iff |gamma_j| > lambda.
  Eigen::VectorXd selected;
  /// Derived: alpha o selected.
  Eigen::VectorXd beta;

  /// Recomputes selected and beta from (gamma, lambda, alpha).
  void refresh();
  /// True when selected/beta agree with (gamma, lambda, alpha).
  bool consistent() const;
  std::size_t selected_count() const;

  /// Bitwise equality of every field.
  friend bool operator==(const ModelState& a, const ModelState& b);
};

}  // namespace tglg
