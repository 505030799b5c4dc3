#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tglg/glm.hpp"
#include "tglg/graph.hpp"
#include "tglg/sampler.hpp"

namespace tglg {

/// Ising selection prior
///   p(gamma) ∝ exp(a sum_i gamma_i + b sum_{edges jk} I(gamma_j = gamma_k))
/// with slab beta_i | gamma_i = 1 ~ N(0, sigma2_beta). Each edge is counted
/// once, so the site conditional below is exact for this joint.
struct IsingPrior {
  double a = -2.0;
  double b = 7.0;
  double sigma2_beta = 1.0;

  void validate() const;
};

/// Prior log-odds of gamma_i = 1 given the other sites: a + b (n1 - n0), where
/// n1 / n0 count neighbours of i currently at 1 / 0.
double ising_conditional_logit(const Eigen::VectorXd& gamma, std::size_t i, const Network& net,
                               double a, double b);

/// Unnormalized log prior of a 0/1 configuration.
double ising_log_prior(const Eigen::VectorXd& gamma, const Network& net, double a, double b);

/// Single-site sampler over (gamma, beta). Sites are swept in order; a site
/// at 0 proposes activation with beta_i drawn from the slab, a site at 1
/// proposes deactivation, and the move is accepted with the Barker
/// probability r / (1 + r) of the extended-space ratio r. Under a flat
/// likelihood this is the exact Gibbs update of the prior conditional. The
/// active betas then move jointly by an adaptive random walk, omega likewise,
/// and the Gaussian noise variance by its conjugate draw.
///
/// The trace has kind "ising": gamma holds the 0/1 indicators, alpha holds
/// beta (exact 0 when inactive) and lambda is 0.5 so that the selection
/// helpers of McmcTrace read the indicators directly. config.steps.alpha is
/// the initial beta step and config.steps.omega the omega step.
McmcTrace ising_gibbs_chain(const Dataset& data, const Network& net, const IsingPrior& prior,
                            const SamplerConfig& config);

std::vector<McmcTrace> run_ising_chains(const Dataset& data, const Network& net,
                                        const IsingPrior& prior, const SamplerConfig& config,
                                        std::size_t chains, std::size_t workers = 1);

}  // namespace tglg
