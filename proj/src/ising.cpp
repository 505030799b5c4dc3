#include "tglg/ising.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "tglg/error.hpp"

namespace tglg {

namespace {

constexpr double kLambda = 0.5;

struct IsingState {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd omega;
  double sigma2_noise = 1.0;
  Eigen::VectorXd eta;
  double loglik = 0.0;
};

double loglik_of(const Dataset& d, const Eigen::VectorXd& eta, double s2) {
  if (d.n() == 0) return 0.0;
  if (!eta.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  return log_likelihood(d, eta, s2);
}

Proposal barker(double log_r, Rng& rng) {
  Proposal out;
  out.log_ratio = log_r;
  if (std::isnan(log_r)) {
    out.nonfinite = true;
    return out;
  }
  // P(accept) = r / (1 + r) = logistic(log r)
  out.accepted = rng.uniform() < logistic(log_r);
  return out;
}

Proposal metropolis(double log_r, Rng& rng) {
  Proposal out;
  out.log_ratio = log_r;
  if (std::isnan(log_r)) {
    out.nonfinite = true;
    return out;
  }
  out.accepted = log_r >= 0.0 || std::log(rng.uniform()) < log_r;
  return out;
}

void site_update(IsingState& s, std::size_t i, const Dataset& d, const Network& net,
                 const IsingPrior& prior, Rng& rng) {
  const double logit = ising_conditional_logit(s.gamma, i, net, prior.a, prior.b);
  const auto col = static_cast<Eigen::Index>(i);
  const bool active = s.gamma[col] == 1.0;
  const double beta_new = active ? 0.0 : rng.normal(0.0, std::sqrt(prior.sigma2_beta));
  const double delta = beta_new - s.beta[col];
  Eigen::VectorXd eta_new = s.eta;
  if (d.n() > 0) eta_new.noalias() += delta * d.x.col(col);
  const double ll_new = loglik_of(d, eta_new, s.sigma2_noise);
  // the slab density of beta_i cancels against its proposal density
  const double log_r = (active ? -logit : logit) + ll_new - s.loglik;
  if (barker(log_r, rng).accepted) {
    s.gamma[col] = active ? 0.0 : 1.0;
    s.beta[col] = beta_new;
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
}

Proposal beta_update(IsingState& s, const Dataset& d, const IsingPrior& prior, double tau2,
                     Rng& rng) {
  std::vector<Eigen::Index> on;
  for (Eigen::Index j = 0; j < s.gamma.size(); ++j) {
    if (s.gamma[j] == 1.0) on.push_back(j);
  }
  if (on.empty()) return {};
  const double sd = std::sqrt(tau2);
  Eigen::VectorXd beta_new = s.beta;
  Eigen::VectorXd eta_new = s.eta;
  double log_prior = 0.0;
  for (Eigen::Index j : on) {
    beta_new[j] += sd * rng.normal();
    if (d.n() > 0) eta_new.noalias() += (beta_new[j] - s.beta[j]) * d.x.col(j);
    log_prior += (s.beta[j] * s.beta[j] - beta_new[j] * beta_new[j]) / (2.0 * prior.sigma2_beta);
  }
  const double ll_new = loglik_of(d, eta_new, s.sigma2_noise);
  Proposal out = metropolis(ll_new - s.loglik + log_prior, rng);
  if (out.accepted) {
    s.beta = std::move(beta_new);
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
  return out;
}

Proposal omega_update(IsingState& s, const Dataset& d, double sigma2_omega, double tau2,
                      Rng& rng) {
  const double sd = std::sqrt(tau2);
  Eigen::VectorXd omega_new = s.omega;
  for (Eigen::Index k = 0; k < omega_new.size(); ++k) omega_new[k] += sd * rng.normal();
  Eigen::VectorXd eta_new = s.eta + d.z * (omega_new - s.omega);
  const double ll_new = loglik_of(d, eta_new, s.sigma2_noise);
  const double log_prior = (s.omega.squaredNorm() - omega_new.squaredNorm()) / (2.0 * sigma2_omega);
  Proposal out = metropolis(ll_new - s.loglik + log_prior, rng);
  if (out.accepted) {
    s.omega = std::move(omega_new);
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
  return out;
}

void noise_update(IsingState& s, const Dataset& d, const TglgHyper& hyper, Rng& rng) {
  if (d.family.tag != Family::kGaussian) return;
  const double rss = (d.y - s.eta).squaredNorm();
  s.sigma2_noise = rng.inverse_gamma(hyper.a_noise + 0.5 * static_cast<double>(d.n()),
                                     hyper.b_noise + 0.5 * rss);
  s.loglik = loglik_of(d, s.eta, s.sigma2_noise);
}

void push(McmcTrace& t, const IsingState& s, const IsingPrior& prior) {
  t.gamma.insert(t.gamma.end(), s.gamma.data(), s.gamma.data() + s.gamma.size());
  t.alpha.insert(t.alpha.end(), s.beta.data(), s.beta.data() + s.beta.size());
  t.omega.insert(t.omega.end(), s.omega.data(), s.omega.data() + s.omega.size());
  t.lambda.push_back(kLambda);
  t.sigma2_gamma.push_back(0.0);
  t.sigma2_alpha.push_back(prior.sigma2_beta);
  t.epsilon.push_back(0.0);
  t.sigma2_noise.push_back(s.sigma2_noise);
  t.log_likelihood.push_back(s.loglik);
}

}  // namespace

void IsingPrior::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::kConfig, "Ising a and b must be finite");
  }
  if (!(sigma2_beta > 0.0) || !std::isfinite(sigma2_beta)) {
    throw Error(ErrorCode::kConfig, "Ising slab variance must be positive");
  }
}

double ising_conditional_logit(const Eigen::VectorXd& gamma, std::size_t i, const Network& net,
                               double a, double b) {
  if (i >= net.size()) throw Error(ErrorCode::kParameter, "site index out of range");
  double diff = 0.0;
  for (std::size_t k : net.neighbors(i)) {
    diff += gamma[static_cast<Eigen::Index>(k)] == 1.0 ? 1.0 : -1.0;
  }
  return a + b * diff;
}

double ising_log_prior(const Eigen::VectorXd& gamma, const Network& net, double a, double b) {
  double out = a * gamma.sum();
  for (const auto& [j, k] : net.edges()) {
    if (gamma[static_cast<Eigen::Index>(j)] == gamma[static_cast<Eigen::Index>(k)]) out += b;
  }
  return out;
}

McmcTrace ising_gibbs_chain(const Dataset& data, const Network& net, const IsingPrior& prior,
                            const SamplerConfig& config) {
  config.validate();
  prior.validate();
  data.validate();
  if (static_cast<std::size_t>(data.p()) != net.size()) {
    throw Error(ErrorCode::kShape, "data has p = " + std::to_string(data.p()) +
                                       " covariates but the network has " +
                                       std::to_string(net.size()) + " nodes");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::size_t p = net.size();
  Rng rng(config.seed);

  IsingState s;
  s.gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  s.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  s.omega = Eigen::VectorXd::Zero(data.q());
  s.sigma2_noise = data.family.noise_variance;
  s.eta = Eigen::VectorXd::Zero(data.n());
  s.loglik = loglik_of(data, s.eta, s.sigma2_noise);

  detail::AdaptiveBlock beta{"beta", config.steps.alpha, config.target_rw, {}};
  detail::AdaptiveBlock omega{"omega", config.steps.omega, config.target_rw, {}};
  const bool sample_omega = data.q() > 0;

  McmcTrace trace;
  trace.kind = "ising";
  trace.p = p;
  trace.q = static_cast<std::size_t>(data.q());
  trace.family = data.family.tag;
  trace.epsilon_mode = EpsilonMode::kFixed;
  trace.seed = config.seed;
  trace.n_iter = config.n_iter;
  trace.burn_in = config.burn_in;
  trace.thin = config.thin;
  trace.reserve((config.n_iter - config.burn_in) / config.thin);

  for (std::size_t iter = 0; iter < config.n_iter; ++iter) {
    const bool burnin = iter < config.burn_in;
    if (sample_omega) {
      omega.record(omega_update(s, data, config.hyper.sigma2_omega, omega.step, rng), burnin);
    }
    for (std::size_t i = 0; i < p; ++i) site_update(s, i, data, net, prior, rng);
    beta.record(beta_update(s, data, prior, beta.step, rng), burnin);
    noise_update(s, data, config.hyper, rng);

    if (burnin && (iter + 1) % config.adapt_interval == 0) {
      beta.adapt(config.adapt_factor);
      omega.adapt(config.adapt_factor);
    }
    if (config.average_final_steps && iter + 1 == config.burn_in / 2) {
      beta.restart_average();
      omega.restart_average();
    }
    if (iter + 1 == config.burn_in) {
      beta.freeze(config.average_final_steps);
      omega.freeze(config.average_final_steps);
    }
    if (!burnin && (iter + 1 - config.burn_in) % config.thin == 0) push(trace, s, prior);
  }

  for (auto* b : {&beta, &omega}) {
    if (b == &omega && !sample_omega) continue;
    if (config.burn_in == 0) b->stats.step_at_burnin_end = b->step;
    b->stats.final_step = b->step;
    trace.blocks[b->name] = b->stats;
  }
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

std::vector<McmcTrace> run_ising_chains(const Dataset& data, const Network& net,
                                        const IsingPrior& prior, const SamplerConfig& config,
                                        std::size_t chains, std::size_t workers) {
  if (chains == 0) throw Error(ErrorCode::kConfig, "at least one chain is required");
  return detail::run_parallel(chains, workers, [&](std::size_t c) {
    SamplerConfig cfg = config;
    cfg.seed = derive_seed(config.seed, c);
    return ising_gibbs_chain(data, net, prior, cfg);
  });
}

}  // namespace tglg
