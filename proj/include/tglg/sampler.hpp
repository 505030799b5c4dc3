#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tglg/glm.hpp"
#include "tglg/graph.hpp"
#include "tglg/prior.hpp"
#include "tglg/rng.hpp"

namespace tglg {

/// Proposal scales of the Metropolis blocks. gamma and alpha are MALA step
/// sizes; the others are random-walk variances.
struct StepSizes {
  double omega = 0.01;
  double gamma = 0.05;
  double alpha = 0.005;
  double epsilon = 1e-6;  ///< natural-scale random walk
  double log_epsilon = 0.25;  ///< random walk on log(epsilon)
  double lambda = 0.01;
  double log_scale = 0.05;  ///< random walk on log(c) of the joint rescaling moves
};

struct SamplerConfig {
  std::size_t n_iter = 30000;
  std::size_t burn_in = 20000;
  std::size_t thin = 1;
  double target_mala = 0.5;
  double target_rw = 0.3;
  StepSizes steps;
  std::size_t adapt_interval = 50;
  double adapt_factor = 1.0;
  std::uint64_t seed = 1;
  TglgHyper hyper;
  /// Hold lambda at this value instead of sampling it.
  std::optional<double> fixed_lambda;
  /// Check the selection/effect invariant after every block.
  bool check_consistency = false;
  /// gamma MALA preconditioner L + r I with this ridge r; r <= 0 uses the
  /// current prior precision L + epsilon I instead.
  double gamma_precond_ridge = 0.0;
  /// Freeze each step at the geometric mean of its adapted values over the
  /// second half of burn-in rather than at the last value.
  bool average_final_steps = true;
  /// Propose epsilon on the log scale instead of the natural scale.
  bool epsilon_log_scale = true;
  /// Add the joint rescaling moves for (gamma, lambda, sigma2_gamma) and
  /// (alpha, sigma2_alpha) after the variance updates.
  bool scale_moves = true;

  /// Acceptance targets of 30% (MALA) / 15% (random walk) instead of 50% / 30%.
  void use_real_data_targets();

  /// Throws Error(kConfig) describing the first violated constraint.
  void validate() const;
};

/// Acceptance bookkeeping for one Metropolis block.
struct BlockStats {
  std::size_t burnin_proposed = 0;
  std::size_t burnin_accepted = 0;
  std::size_t proposed = 0;  ///< after burn-in
  std::size_t accepted = 0;  ///< after burn-in
  std::size_t nonfinite = 0;  ///< proposals rejected for a non-finite drift or density
  double step_at_burnin_end = 0.0;
  double final_step = 0.0;

  double acceptance_rate() const {
    return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
};

/// Thinned post-burn-in samples of one chain. Vector-valued parameters are
/// stored row-major: sample i occupies [i * p, (i + 1) * p).
struct McmcTrace {
  std::string kind = "tglg";  ///< "tglg" or "ising"
  std::size_t p = 0;
  std::size_t q = 0;
  Family family = Family::kGaussian;
  EpsilonMode epsilon_mode = EpsilonMode::kFixed;
  std::uint64_t seed = 0;
  std::size_t n_iter = 0;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  double wall_seconds = 0.0;

  std::vector<double> gamma;
  std::vector<double> alpha;
  std::vector<double> omega;
  std::vector<double> lambda;
  std::vector<double> sigma2_gamma;
  std::vector<double> sigma2_alpha;
  std::vector<double> epsilon;
  std::vector<double> sigma2_noise;
  std::vector<double> log_likelihood;

  std::map<std::string, BlockStats> blocks;

  std::size_t size() const noexcept { return lambda.size(); }
  double gamma_at(std::size_t i, std::size_t j) const { return gamma[i * p + j]; }
  double alpha_at(std::size_t i, std::size_t j) const { return alpha[i * p + j]; }
  double omega_at(std::size_t i, std::size_t k) const { return omega[i * q + k]; }
  bool selected_at(std::size_t i, std::size_t j) const {
    return std::abs(gamma_at(i, j)) > lambda[i];
  }
  /// beta_j of sample i (alpha_j if selected, else 0).
  double beta_at(std::size_t i, std::size_t j) const {
    return selected_at(i, j) ? alpha_at(i, j) : 0.0;
  }

  void reserve(std::size_t n);
  void push(const ModelState& s, double loglik);
};

/// Fixed ingredients of the posterior shared by every chain: data, graph
/// Laplacian and hyperparameters.
class Posterior {
 public:
  Posterior(const Dataset& data, const Network& net, const TglgHyper& hyper);
  /// Network-free variant used by tests: base precision given directly.
  Posterior(const Dataset& data, SparseMatrix base, const TglgHyper& hyper);

  const Dataset& data() const noexcept { return *data_; }
  const SparseMatrix& base() const noexcept { return base_; }
  const TglgHyper& hyper() const noexcept { return hyper_; }
  Eigen::Index p() const noexcept { return base_.rows(); }
  Eigen::Index q() const noexcept { return data_->q(); }
  bool gaussian() const noexcept { return data_->family.tag == Family::kGaussian; }

  /// Precision for a given epsilon (identity for the network-free prior).
  LaplacianPrecision precision(double epsilon) const;

 private:
  const Dataset* data_;
  SparseMatrix base_;
  TglgHyper hyper_;
  // epsilon = 1 factor whose ordering every other epsilon reuses
  LaplacianPrecision reference_;
};

/// Mutable chain position: parameters plus the cached linear predictor,
/// log-likelihood and factorized precision for the current epsilon.
struct ChainState {
  ModelState params;
  LaplacianPrecision precision;
  Eigen::VectorXd eta;
  double loglik = 0.0;

  /// Recomputes eta and loglik from params.
  void sync(const Posterior& post);
};

/// Starting point: gamma from its prior with sigma2_gamma = 1, alpha ~ N(0, 1),
/// omega = 0, lambda = lambda_u / 20, variances 1, epsilon at its configured
/// value (exp(mu) in lognormal mode).
ChainState initial_state(const Posterior& post, Rng& rng,
                         std::optional<double> fixed_lambda = std::nullopt);
ChainState make_state(const Posterior& post, ModelState params);

/// Outcome of a single Metropolis proposal.
struct Proposal {
  bool accepted = false;
  bool nonfinite = false;
  double log_ratio = 0.0;
};

/// Log posterior of gamma up to a constant: log-likelihood at the composed
/// beta plus the Gaussian prior. In smooth mode beta uses the arctan
/// threshold, making the target differentiable.
double gamma_log_target(const ChainState& s, const Posterior& post,
                        const Eigen::VectorXd& gamma, ThresholdMode mode);
/// Gradient of the log-likelihood through d beta / d gamma (arctan
/// approximation) plus the prior gradient -Q gamma / sigma2_gamma. In hard
/// mode the linear predictor is the one of the hard-threshold beta.
Eigen::VectorXd gamma_gradient(const ChainState& s, const Posterior& post,
                               const Eigen::VectorXd& gamma, ThresholdMode mode);

/// Log posterior of alpha up to a constant.
double alpha_log_target(const ChainState& s, const Posterior& post,
                        const Eigen::VectorXd& alpha, ThresholdMode mode);
/// Full gradient with respect to alpha.
Eigen::VectorXd alpha_gradient(const ChainState& s, const Posterior& post,
                               const Eigen::VectorXd& alpha, ThresholdMode mode);

Proposal update_omega(ChainState& s, const Posterior& post, double tau2, Rng& rng);

/// Langevin proposal for gamma, preconditioned by M = sigma2_gamma P^{-1}:
///   gamma' = gamma + (tau2 / 2) M grad + sqrt(tau2) M^{1/2} z,
/// accepted with the asymmetric-proposal Metropolis-Hastings ratio. P is
/// `precond` when given, else the current prior precision Q.
Proposal update_gamma_mala(ChainState& s, const Posterior& post, double tau2, Rng& rng,
                           const LaplacianPrecision* precond = nullptr);

/// Recomputes the selected set and beta from (gamma, lambda, alpha).
void update_xi(ModelState& params);

/// Off-support alpha_j refreshed from N(0, sigma2_alpha); the selected block
/// moved jointly by MALA. Returns a no-op proposal when nothing is selected.
Proposal update_alpha_mala(ChainState& s, const Posterior& post, double tau2, Rng& rng);

void update_sigma_gamma(ChainState& s, const Posterior& post, Rng& rng);
void update_sigma_alpha(ChainState& s, const Posterior& post, Rng& rng);
/// Gaussian family only: sigma2_noise ~ IG(a + n/2, b + RSS/2).
void update_noise_variance(ChainState& s, const Posterior& post, Rng& rng);

/// Log acceptance ratio of moving epsilon to eps_new for fixed gamma.
/// Returns -inf for eps_new <= 0.
double epsilon_log_ratio(const ChainState& s, const Posterior& post, double eps_new,
                         const LaplacianPrecision* prec_new = nullptr);
/// Random walk on epsilon, or on log(epsilon) when log_scale is set (the
/// Jacobian eps_new / eps then enters the ratio).
Proposal update_epsilon(ChainState& s, const Posterior& post, double tau2, Rng& rng,
                        bool log_scale = false);

/// log density of N(mean, sd2) truncated to [lo, hi] at x.
double truncated_normal_log_density(double x, double mean, double lo, double hi, double sd2);
double sample_truncated_normal(double mean, double lo, double hi, double sd2, Rng& rng);

/// Log acceptance ratio for moving lambda to lambda_new.
double lambda_log_ratio(const ChainState& s, const Posterior& post, double lambda_new,
                        double sd2);
Proposal update_lambda(ChainState& s, const Posterior& post, double sd2, Rng& rng);

/// Upper end of the support of sigma2_gamma and sigma2_alpha. IG(0.01, 0.01)
/// puts about 0.3% of its mass beyond it, where squared effects overflow.
inline constexpr double kVarianceCeiling = 1e250;

/// Joint rescaling gamma -> c gamma, sigma2_gamma -> c^2 sigma2_gamma, and
/// lambda -> c lambda when `with_lambda` (which keeps the selected set, so the
/// likelihood is unchanged). log c ~ N(0, tau2). Proposals with c lambda >
/// lambda_u are rejected.
Proposal update_gamma_scale(ChainState& s, const Posterior& post, double tau2, Rng& rng,
                            bool with_lambda);
/// log acceptance ratio of the move above for a given log c.
double gamma_scale_log_ratio(const ChainState& s, const Posterior& post, double log_c,
                             bool with_lambda);

/// alpha -> c alpha, sigma2_alpha -> c^2 sigma2_alpha, log c ~ N(0, tau2).
Proposal update_alpha_scale(ChainState& s, const Posterior& post, double tau2, Rng& rng);
double alpha_scale_log_ratio(const ChainState& s, const Posterior& post, double log_c);

/// tau2 * exp(factor * (observed - target)).
double adapt_step(double tau2, double observed, double target, double factor = 1.0);

McmcTrace run_chain(const Dataset& data, const Network& net, const SamplerConfig& config);
McmcTrace run_chain(const Posterior& post, const SamplerConfig& config);

/// Runs `chains` independent chains with seeds derived from config.seed, on
/// up to `workers` threads.
std::vector<McmcTrace> run_chains(const Dataset& data, const Network& net,
                                  const SamplerConfig& config, std::size_t chains,
                                  std::size_t workers = 1);

}  // namespace tglg
