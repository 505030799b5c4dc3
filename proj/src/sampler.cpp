#include "tglg/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "detail.hpp"
#include "tglg/error.hpp"
#include "tglg/log.hpp"

namespace tglg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double loglik_at(const Posterior& post, const ChainState& s, const Eigen::VectorXd& eta) {
  if (post.data().n() == 0) return 0.0;
  // an overflowing proposal is rejected, not fatal
  if (!eta.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  return log_likelihood(post.data(), eta, s.params.sigma2_noise);
}

Eigen::VectorXd residual_grad(const Posterior& post, const ChainState& s,
                              const Eigen::VectorXd& eta) {
  if (!eta.allFinite()) {
    return Eigen::VectorXd::Constant(eta.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return grad_h(post.data(), eta, s.params.sigma2_noise);
}

Eigen::VectorXd predictor(const Posterior& post, const Eigen::VectorXd& omega,
                          const Eigen::VectorXd& beta) {
  const Dataset& d = post.data();
  Eigen::VectorXd eta;
  // beta is mostly exact zeros; touch only the active columns
  if (const auto nnz = (beta.array() != 0.0).count(); 4 * nnz < beta.size()) {
    eta = Eigen::VectorXd::Zero(d.n());
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (beta[j] != 0.0) eta.noalias() += beta[j] * d.x.col(j);
    }
  } else {
    eta.noalias() = d.x * beta;
  }
  if (d.q() > 0) eta.noalias() += d.z * omega;
  return eta;
}

// Metropolis decision in log space; NaN and +/-inf are handled explicitly.
Proposal decide(double log_ratio, Rng& rng) {
  Proposal out;
  out.log_ratio = log_ratio;
  if (std::isnan(log_ratio)) {
    out.nonfinite = true;
    return out;
  }
  if (log_ratio >= 0.0) {
    out.accepted = true;
  } else {
    out.accepted = std::log(rng.uniform()) < log_ratio;
  }
  return out;
}

// IG(shape, scale) restricted to (0, kVarianceCeiling]. Plain draws almost
// always land below; the inverse CDF covers the rest.
double capped_inverse_gamma(double shape, double scale, Rng& rng) {
  for (int tries = 0; tries < 32; ++tries) {
    const double v = rng.inverse_gamma(shape, scale);
    if (v <= kVarianceCeiling) return v;
  }
  if (!std::isfinite(scale)) return kVarianceCeiling;
  // the gamma variate must exceed scale / ceiling
  const double lo = boost::math::gamma_p(shape, scale / kVarianceCeiling);
  const double u = lo + (1.0 - lo) * rng.uniform();
  if (!(u < 1.0)) return kVarianceCeiling;
  return std::min(scale / boost::math::gamma_p_inv(shape, u), kVarianceCeiling);
}

void check_block(const ChainState& s, const char* block) {
  if (!s.params.consistent()) {
    throw Error(ErrorCode::kNumeric,
                std::string("selection/effect invariant broken after ") + block + " update");
  }
}

}  // namespace

void SamplerConfig::use_real_data_targets() {
  target_mala = 0.3;
  target_rw = 0.15;
}

void SamplerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  if (n_iter == 0) fail("n_iter must be positive");
  if (burn_in >= n_iter) fail("burn_in must be smaller than n_iter");
  if (thin == 0) fail("thin must be at least 1");
  if (!(target_mala > 0.0 && target_mala < 1.0)) fail("MALA target rate must lie in (0, 1)");
  if (!(target_rw > 0.0 && target_rw < 1.0)) fail("random-walk target rate must lie in (0, 1)");
  if (adapt_interval == 0) fail("adapt_interval must be positive");
  if (!std::isfinite(gamma_precond_ridge)) fail("gamma_precond_ridge must be finite");
  for (double s : {steps.omega, steps.gamma, steps.alpha, steps.epsilon, steps.log_epsilon,
                   steps.lambda, steps.log_scale}) {
    if (!(s > 0.0) || !std::isfinite(s)) fail("step sizes must be positive");
  }
  hyper.validate();
  if (fixed_lambda && !(*fixed_lambda >= 0.0 && *fixed_lambda <= hyper.lambda_u)) {
    fail("fixed lambda must lie in [0, lambda_u]");
  }
}

void McmcTrace::reserve(std::size_t n) {
  gamma.reserve(n * p);
  alpha.reserve(n * p);
  omega.reserve(n * q);
  for (auto* v : {&lambda, &sigma2_gamma, &sigma2_alpha, &epsilon, &sigma2_noise,
                  &log_likelihood}) {
    v->reserve(n);
  }
}

void McmcTrace::push(const ModelState& s, double loglik) {
  gamma.insert(gamma.end(), s.gamma.data(), s.gamma.data() + s.gamma.size());
  alpha.insert(alpha.end(), s.alpha.data(), s.alpha.data() + s.alpha.size());
  omega.insert(omega.end(), s.omega.data(), s.omega.data() + s.omega.size());
  lambda.push_back(s.lambda);
  sigma2_gamma.push_back(s.sigma2_gamma);
  sigma2_alpha.push_back(s.sigma2_alpha);
  epsilon.push_back(s.epsilon);
  sigma2_noise.push_back(s.sigma2_noise);
  log_likelihood.push_back(loglik);
}

Posterior::Posterior(const Dataset& data, const Network& net, const TglgHyper& hyper)
    : data_(&data), hyper_(hyper) {
  if (static_cast<std::size_t>(data.p()) != net.size()) {
    throw Error(ErrorCode::kShape, "data has p = " + std::to_string(data.p()) +
                                       " covariates but the network has " +
                                       std::to_string(net.size()) + " nodes");
  }
  data.validate();
  hyper.validate();
  if (hyper.epsilon.mode == EpsilonMode::kIndependent) {
    base_ = SparseMatrix(data.p(), data.p());
  } else {
    base_ = build_laplacian(net);
    if (auto iso = net.isolated_nodes(); !iso.empty()) {
      std::string list;
      for (std::size_t k = 0; k < iso.size() && k < 20; ++k) {
        list += (k ? ", " : "") + std::to_string(iso[k] + 1);
      }
      if (iso.size() > 20) list += ", ...";
      warn(std::to_string(iso.size()) +
           " isolated node(s) get prior precision epsilon only: " + list);
    }
  }
  reference_ = LaplacianPrecision(base_, 1.0);
}

Posterior::Posterior(const Dataset& data, SparseMatrix base, const TglgHyper& hyper)
    : data_(&data), base_(std::move(base)), hyper_(hyper) {
  if (base_.rows() != data.p()) throw Error(ErrorCode::kShape, "base precision size mismatch");
  data.validate();
  hyper.validate();
  reference_ = LaplacianPrecision(base_, 1.0);
}

LaplacianPrecision Posterior::precision(double epsilon) const {
  if (hyper_.epsilon.mode == EpsilonMode::kIndependent) return reference_;
  return reference_.with_epsilon(epsilon);
}

void ChainState::sync(const Posterior& post) {
  params.refresh();
  eta = predictor(post, params.omega, params.beta);
  loglik = loglik_at(post, *this, eta);
}

ChainState make_state(const Posterior& post, ModelState params) {
  ChainState s;
  s.params = std::move(params);
  s.precision = post.precision(s.params.epsilon);
  s.sync(post);
  return s;
}

ChainState initial_state(const Posterior& post, Rng& rng, std::optional<double> fixed_lambda) {
  const TglgHyper& h = post.hyper();
  ModelState m;
  switch (h.epsilon.mode) {
    case EpsilonMode::kFixed: m.epsilon = h.epsilon.value; break;
    case EpsilonMode::kLognormal: m.epsilon = std::exp(h.epsilon.mu); break;
    case EpsilonMode::kIndependent: m.epsilon = 1.0; break;
  }
  m.lambda = fixed_lambda.value_or(h.lambda_u / 20.0);
  m.sigma2_gamma = 1.0;
  m.sigma2_alpha = 1.0;
  m.sigma2_noise = 1.0;
  m.omega = Eigen::VectorXd::Zero(post.q());
  LaplacianPrecision prec = post.precision(m.epsilon);
  m.gamma = sample_gamma_prior(prec, m.sigma2_gamma, rng);
  m.alpha.resize(post.p());
  for (Eigen::Index j = 0; j < post.p(); ++j) m.alpha[j] = rng.normal();
  ChainState s;
  s.params = std::move(m);
  s.precision = std::move(prec);
  s.sync(post);
  return s;
}

double gamma_log_target(const ChainState& s, const Posterior& post,
                        const Eigen::VectorXd& gamma, ThresholdMode mode) {
  const ModelState& m = s.params;
  Eigen::VectorXd beta = compose_beta(m.alpha, gamma, m.lambda, mode, post.hyper().eps0);
  Eigen::VectorXd eta = predictor(post, m.omega, beta);
  return loglik_at(post, s, eta) - 0.5 * s.precision.quad_form(gamma) / m.sigma2_gamma;
}

namespace {

// Likelihood part of the gamma gradient given the residual gradient r.
Eigen::VectorXd gamma_lik_gradient(const Posterior& post, const ModelState& m,
                                   const Eigen::VectorXd& gamma, const Eigen::VectorXd& r) {
  const double eps0 = post.hyper().eps0;
  if (post.data().n() == 0) return Eigen::VectorXd::Zero(gamma.size());
  Eigen::VectorXd g = post.data().x.transpose() * r;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    g[j] *= smooth_threshold_grad(m.alpha[j], gamma[j], m.lambda, eps0);
  }
  return g;
}

}  // namespace

Eigen::VectorXd gamma_gradient(const ChainState& s, const Posterior& post,
                               const Eigen::VectorXd& gamma, ThresholdMode mode) {
  const ModelState& m = s.params;
  Eigen::VectorXd beta = compose_beta(m.alpha, gamma, m.lambda, mode, post.hyper().eps0);
  Eigen::VectorXd eta = predictor(post, m.omega, beta);
  Eigen::VectorXd g = gamma_lik_gradient(post, m, gamma, residual_grad(post, s, eta));
  return g - s.precision.multiply(gamma) / m.sigma2_gamma;
}

double alpha_log_target(const ChainState& s, const Posterior& post,
                        const Eigen::VectorXd& alpha, ThresholdMode mode) {
  const ModelState& m = s.params;
  Eigen::VectorXd beta = compose_beta(alpha, m.gamma, m.lambda, mode, post.hyper().eps0);
  Eigen::VectorXd eta = predictor(post, m.omega, beta);
  return loglik_at(post, s, eta) - 0.5 * alpha.squaredNorm() / m.sigma2_alpha;
}

Eigen::VectorXd alpha_gradient(const ChainState& s, const Posterior& post,
                               const Eigen::VectorXd& alpha, ThresholdMode mode) {
  const ModelState& m = s.params;
  const double eps0 = post.hyper().eps0;
  Eigen::VectorXd t = mode == ThresholdMode::kHard
                          ? hard_threshold(m.gamma, m.lambda)
                          : compose_beta(Eigen::VectorXd::Ones(alpha.size()), m.gamma,
                                         m.lambda, ThresholdMode::kSmooth, eps0);
  Eigen::VectorXd g = -alpha / m.sigma2_alpha;
  if (post.data().n() > 0) {
    Eigen::VectorXd eta = predictor(post, m.omega, alpha.cwiseProduct(t));
    Eigen::VectorXd r = residual_grad(post, s, eta);
    g += (post.data().x.transpose() * r).cwiseProduct(t);
  }
  return g;
}

Proposal update_omega(ChainState& s, const Posterior& post, double tau2, Rng& rng) {
  const Eigen::Index q = post.q();
  if (q == 0) return {};
  const double tau = std::sqrt(tau2);
  Eigen::VectorXd omega_new = s.params.omega;
  for (Eigen::Index k = 0; k < q; ++k) omega_new[k] += tau * rng.normal();
  Eigen::VectorXd eta_new = s.eta + post.data().z * (omega_new - s.params.omega);
  const double ll_new = loglik_at(post, s, eta_new);
  const double s2 = post.hyper().sigma2_omega;
  const double log_ratio = ll_new - s.loglik -
                           0.5 * (omega_new.squaredNorm() - s.params.omega.squaredNorm()) / s2;
  Proposal out = decide(log_ratio, rng);
  if (out.accepted) {
    s.params.omega = std::move(omega_new);
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
  return out;
}

Proposal update_gamma_mala(ChainState& s, const Posterior& post, double tau2, Rng& rng,
                           const LaplacianPrecision* precond) {
  ModelState& m = s.params;
  const double s2 = m.sigma2_gamma;
  const LaplacianPrecision& prec = s.precision;
  const LaplacianPrecision& pc = precond ? *precond : prec;

  // drift(g) = (tau2 / 2) M grad log pi(g), M = s2 P^{-1}
  auto drift = [&](const Eigen::VectorXd& g, const Eigen::VectorXd& eta) {
    Eigen::VectorXd grad = s2 * gamma_lik_gradient(post, m, g, residual_grad(post, s, eta)) -
                           prec.multiply(g);
    return Eigen::VectorXd(0.5 * tau2 * pc.solve(grad));
  };
  // log N(to | from + drift_from, tau2 M), dropping terms equal in both directions
  auto log_q = [&](const Eigen::VectorXd& to, const Eigen::VectorXd& from,
                   const Eigen::VectorXd& drift_from) {
    Eigen::VectorXd d = to - from - drift_from;
    return -0.5 * pc.quad_form(d) / (tau2 * s2);
  };

  const Eigen::VectorXd drift_cur = drift(m.gamma, s.eta);
  Eigen::VectorXd z(m.gamma.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
  Eigen::VectorXd gamma_new = m.gamma + drift_cur + std::sqrt(tau2 * s2) * pc.whiten_inverse(z);
  if (!gamma_new.allFinite()) {
    Proposal out;
    out.nonfinite = true;
    return out;
  }

  Eigen::VectorXd beta_new = compose_beta(m.alpha, gamma_new, m.lambda);
  Eigen::VectorXd eta_new = predictor(post, m.omega, beta_new);
  const double ll_new = loglik_at(post, s, eta_new);
  const Eigen::VectorXd drift_new = drift(gamma_new, eta_new);
  if (!drift_new.allFinite()) {
    Proposal out;
    out.nonfinite = true;
    return out;
  }

  const double log_ratio = ll_new - s.loglik -
                           0.5 * (prec.quad_form(gamma_new) - prec.quad_form(m.gamma)) / s2 +
                           log_q(m.gamma, gamma_new, drift_new) -
                           log_q(gamma_new, m.gamma, drift_cur);
  Proposal out = decide(log_ratio, rng);
  if (out.accepted) {
    m.gamma = std::move(gamma_new);
    m.selected = hard_threshold(m.gamma, m.lambda);
    m.beta = std::move(beta_new);
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
  return out;
}

void update_xi(ModelState& params) { params.refresh(); }

Proposal update_alpha_mala(ChainState& s, const Posterior& post, double tau2, Rng& rng) {
  ModelState& m = s.params;
  const double sd_alpha = std::sqrt(m.sigma2_alpha);
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < m.alpha.size(); ++j) {
    if (m.selected[j] > 0.5) {
      support.push_back(j);
    } else {
      m.alpha[j] = sd_alpha * rng.normal();
    }
  }
  if (support.empty()) return {};

  const Dataset& d = post.data();
  const auto k = static_cast<Eigen::Index>(support.size());
  auto grad = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& eta) {
    Eigen::VectorXd g = -a / m.sigma2_alpha;
    if (d.n() > 0) {
      Eigen::VectorXd r = residual_grad(post, s, eta);
      for (Eigen::Index i = 0; i < k; ++i) g[i] += d.x.col(support[i]).dot(r);
    }
    return g;
  };

  Eigen::VectorXd a_cur(k);
  for (Eigen::Index i = 0; i < k; ++i) a_cur[i] = m.alpha[support[i]];
  const Eigen::VectorXd mean_cur = a_cur + 0.5 * tau2 * grad(a_cur, s.eta);
  const double tau = std::sqrt(tau2);
  Eigen::VectorXd a_new(k);
  for (Eigen::Index i = 0; i < k; ++i) a_new[i] = mean_cur[i] + tau * rng.normal();
  if (!a_new.allFinite()) {
    Proposal out;
    out.nonfinite = true;
    return out;
  }

  Eigen::VectorXd eta_new = s.eta;
  if (d.n() > 0) {
    for (Eigen::Index i = 0; i < k; ++i) eta_new += d.x.col(support[i]) * (a_new[i] - a_cur[i]);
  }
  const double ll_new = loglik_at(post, s, eta_new);
  const Eigen::VectorXd mean_new = a_new + 0.5 * tau2 * grad(a_new, eta_new);
  const double log_q_rev = -0.5 * (a_cur - mean_new).squaredNorm() / tau2;
  const double log_q_fwd = -0.5 * (a_new - mean_cur).squaredNorm() / tau2;
  const double log_ratio = ll_new - s.loglik -
                           0.5 * (a_new.squaredNorm() - a_cur.squaredNorm()) / m.sigma2_alpha +
                           log_q_rev - log_q_fwd;
  Proposal out = decide(log_ratio, rng);
  if (out.accepted) {
    for (Eigen::Index i = 0; i < k; ++i) {
      m.alpha[support[i]] = a_new[i];
      m.beta[support[i]] = a_new[i];
    }
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
  return out;
}

void update_sigma_gamma(ChainState& s, const Posterior& post, Rng& rng) {
  const double p = static_cast<double>(s.params.gamma.size());
  const double shape = post.hyper().a_gamma + 0.5 * p;
  const double scale = post.hyper().b_gamma + 0.5 * s.precision.quad_form(s.params.gamma);
  s.params.sigma2_gamma = capped_inverse_gamma(shape, scale, rng);
}

void update_sigma_alpha(ChainState& s, const Posterior& post, Rng& rng) {
  const double p = static_cast<double>(s.params.alpha.size());
  const double shape = post.hyper().a_alpha + 0.5 * p;
  const double scale = post.hyper().b_alpha + 0.5 * s.params.alpha.squaredNorm();
  s.params.sigma2_alpha = capped_inverse_gamma(shape, scale, rng);
}

void update_noise_variance(ChainState& s, const Posterior& post, Rng& rng) {
  if (!post.gaussian()) return;
  const Dataset& d = post.data();
  const double shape = post.hyper().a_noise + 0.5 * static_cast<double>(d.n());
  const double rss = d.n() > 0 ? (d.y - s.eta).squaredNorm() : 0.0;
  s.params.sigma2_noise = rng.inverse_gamma(shape, post.hyper().b_noise + 0.5 * rss);
  s.loglik = loglik_at(post, s, s.eta);
}

double epsilon_log_ratio(const ChainState& s, const Posterior& post, double eps_new,
                         const LaplacianPrecision* prec_new) {
  if (!(eps_new > 0.0)) return kNegInf;
  const ModelState& m = s.params;
  const EpsilonPrior& ep = post.hyper().epsilon;
  std::optional<LaplacianPrecision> local;
  if (!prec_new) {
    local = post.precision(eps_new);
    prec_new = &*local;
  }
  const double eps = m.epsilon;
  const double gg = m.gamma.squaredNorm();
  const double log_prior_new = -std::log(eps_new) -
                               std::pow(std::log(eps_new) - ep.mu, 2) / (2.0 * ep.sigma2);
  const double log_prior_cur = -std::log(eps) -
                               std::pow(std::log(eps) - ep.mu, 2) / (2.0 * ep.sigma2);
  return 0.5 * (prec_new->log_det() - s.precision.log_det()) -
         (eps_new - eps) * gg / (2.0 * m.sigma2_gamma) + log_prior_new - log_prior_cur;
}

Proposal update_epsilon(ChainState& s, const Posterior& post, double tau2, Rng& rng,
                        bool log_scale) {
  const double step = std::sqrt(tau2) * rng.normal();
  const double eps = s.params.epsilon;
  const double eps_new = log_scale ? eps * std::exp(step) : eps + step;
  if (!(eps_new > 0.0) || !std::isfinite(eps_new)) {
    // consume the uniform anyway so the stream does not depend on the branch
    (void)rng.uniform();
    return {};
  }
  LaplacianPrecision prec_new;
  try {
    prec_new = post.precision(eps_new);
  } catch (const Error&) {
    (void)rng.uniform();
    Proposal out;
    out.nonfinite = true;
    return out;
  }
  double log_ratio = epsilon_log_ratio(s, post, eps_new, &prec_new);
  if (log_scale) log_ratio += step;
  Proposal out = decide(log_ratio, rng);
  if (out.accepted) {
    s.params.epsilon = eps_new;
    s.precision = std::move(prec_new);
  }
  return out;
}

namespace {

// Standard normal CDF mass on [a, b], accurate in both tails.
double normal_mass(double a, double b) {
  if (a > 0.0) return normal_mass(-b, -a);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  // both endpoints below 0 or straddling: lower-tail CDFs have full precision
  return 0.5 * (std::erfc(-b * inv_sqrt2) - std::erfc(-a * inv_sqrt2));
}

}  // namespace

double truncated_normal_log_density(double x, double mean, double lo, double hi, double sd2) {
  if (x < lo || x > hi) return kNegInf;
  const double sd = std::sqrt(sd2);
  const double z = (x - mean) / sd;
  const double mass = normal_mass((lo - mean) / sd, (hi - mean) / sd);
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd) - std::log(mass);
}

double sample_truncated_normal(double mean, double lo, double hi, double sd2, Rng& rng) {
  const double sd = std::sqrt(sd2);
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  bool flipped = false;
  if (a > 0.0) {
    std::tie(a, b) = std::pair(-b, -a);
    flipped = true;
  }
  static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
  const double pa = boost::math::cdf(std_normal, a);
  const double pb = boost::math::cdf(std_normal, b);
  double u = pa + rng.uniform() * (pb - pa);
  u = std::clamp(u, std::max(pa, std::numeric_limits<double>::min()), pb);
  double z = boost::math::quantile(std_normal, u);
  z = std::clamp(z, a, b);
  if (flipped) z = -z;
  return std::clamp(mean + sd * z, lo, hi);
}

double lambda_log_ratio(const ChainState& s, const Posterior& post, double lambda_new,
                        double sd2) {
  const ModelState& m = s.params;
  const double lo = 0.0;
  const double hi = post.hyper().lambda_u;
  Eigen::VectorXd beta_new = compose_beta(m.alpha, m.gamma, lambda_new);
  const double ll_new = loglik_at(post, s, predictor(post, m.omega, beta_new));
  return ll_new - s.loglik + truncated_normal_log_density(m.lambda, lambda_new, lo, hi, sd2) -
         truncated_normal_log_density(lambda_new, m.lambda, lo, hi, sd2);
}

Proposal update_lambda(ChainState& s, const Posterior& post, double sd2, Rng& rng) {
  ModelState& m = s.params;
  const double hi = post.hyper().lambda_u;
  const double lambda_new = sample_truncated_normal(m.lambda, 0.0, hi, sd2, rng);
  Eigen::VectorXd beta_new = compose_beta(m.alpha, m.gamma, lambda_new);
  Eigen::VectorXd eta_new = predictor(post, m.omega, beta_new);
  const double ll_new = loglik_at(post, s, eta_new);
  const double log_ratio = ll_new - s.loglik +
                           truncated_normal_log_density(m.lambda, lambda_new, 0.0, hi, sd2) -
                           truncated_normal_log_density(lambda_new, m.lambda, 0.0, hi, sd2);
  Proposal out = decide(log_ratio, rng);
  if (out.accepted) {
    m.lambda = lambda_new;
    m.selected = hard_threshold(m.gamma, m.lambda);
    m.beta = std::move(beta_new);
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
  return out;
}

double gamma_scale_log_ratio(const ChainState& s, const Posterior& post, double log_c,
                             bool with_lambda) {
  const ModelState& m = s.params;
  const double c = std::exp(log_c);
  const double lambda_new = with_lambda ? c * m.lambda : m.lambda;
  const double sg_new = c * c * m.sigma2_gamma;
  if (!(lambda_new <= post.hyper().lambda_u) || !(sg_new > 0.0 && sg_new <= kVarianceCeiling)) {
    return kNegInf;
  }
  // Jacobian and the Gaussian normalizer cancel to c^(1 - 2a) with lambda, c^(-2a) without
  const double a = post.hyper().a_gamma;
  const double b = post.hyper().b_gamma;
  double out = ((with_lambda ? 1.0 : 0.0) - 2.0 * a) * log_c - b / sg_new + b / m.sigma2_gamma;
  const Eigen::VectorXd beta_new = compose_beta(m.alpha, c * m.gamma, lambda_new);
  if (beta_new != m.beta) out += loglik_at(post, s, predictor(post, m.omega, beta_new)) - s.loglik;
  return out;
}

Proposal update_gamma_scale(ChainState& s, const Posterior& post, double tau2, Rng& rng,
                            bool with_lambda) {
  ModelState& m = s.params;
  const double log_c = std::sqrt(tau2) * rng.normal();
  const double c = std::exp(log_c);
  const double lambda_new = with_lambda ? c * m.lambda : m.lambda;
  const double sg_new = c * c * m.sigma2_gamma;
  if (!(lambda_new <= post.hyper().lambda_u) || !(sg_new > 0.0 && sg_new <= kVarianceCeiling)) {
    (void)rng.uniform();
    return {};
  }
  Eigen::VectorXd gamma_new = c * m.gamma;
  Eigen::VectorXd beta_new = compose_beta(m.alpha, gamma_new, lambda_new);
  const double a = post.hyper().a_gamma;
  const double b = post.hyper().b_gamma;
  double log_ratio =
      ((with_lambda ? 1.0 : 0.0) - 2.0 * a) * log_c - b / sg_new + b / m.sigma2_gamma;
  const bool moved = beta_new != m.beta;
  Eigen::VectorXd eta_new;
  double ll_new = s.loglik;
  if (moved) {
    eta_new = predictor(post, m.omega, beta_new);
    ll_new = loglik_at(post, s, eta_new);
    log_ratio += ll_new - s.loglik;
  }
  Proposal out = decide(log_ratio, rng);
  if (out.accepted) {
    m.gamma = std::move(gamma_new);
    m.lambda = lambda_new;
    m.sigma2_gamma = sg_new;
    m.selected = hard_threshold(m.gamma, m.lambda);
    m.beta = std::move(beta_new);
    if (moved) {
      s.eta = std::move(eta_new);
      s.loglik = ll_new;
    }
  }
  return out;
}

double alpha_scale_log_ratio(const ChainState& s, const Posterior& post, double log_c) {
  const ModelState& m = s.params;
  const double c = std::exp(log_c);
  const double sa_new = c * c * m.sigma2_alpha;
  if (!(sa_new > 0.0 && sa_new <= kVarianceCeiling)) return kNegInf;
  const double a = post.hyper().a_alpha;
  const double b = post.hyper().b_alpha;
  const Eigen::VectorXd beta_new = compose_beta(c * m.alpha, m.gamma, m.lambda);
  return -2.0 * a * log_c - b / sa_new + b / m.sigma2_alpha +
         loglik_at(post, s, predictor(post, m.omega, beta_new)) - s.loglik;
}

Proposal update_alpha_scale(ChainState& s, const Posterior& post, double tau2, Rng& rng) {
  ModelState& m = s.params;
  const double log_c = std::sqrt(tau2) * rng.normal();
  const double c = std::exp(log_c);
  const double sa_new = c * c * m.sigma2_alpha;
  if (!(sa_new > 0.0 && sa_new <= kVarianceCeiling)) {
    (void)rng.uniform();
    return {};
  }
  Eigen::VectorXd alpha_new = c * m.alpha;
  Eigen::VectorXd beta_new = compose_beta(alpha_new, m.gamma, m.lambda);
  Eigen::VectorXd eta_new = predictor(post, m.omega, beta_new);
  const double ll_new = loglik_at(post, s, eta_new);
  const double a = post.hyper().a_alpha;
  const double b = post.hyper().b_alpha;
  const double log_ratio =
      -2.0 * a * log_c - b / sa_new + b / m.sigma2_alpha + ll_new - s.loglik;
  Proposal out = decide(log_ratio, rng);
  if (out.accepted) {
    m.alpha = std::move(alpha_new);
    m.sigma2_alpha = sa_new;
    m.beta = std::move(beta_new);
    s.eta = std::move(eta_new);
    s.loglik = ll_new;
  }
  return out;
}

double adapt_step(double tau2, double observed, double target, double factor) {
  return tau2 * std::exp(factor * (observed - target));
}


McmcTrace run_chain(const Dataset& data, const Network& net, const SamplerConfig& config) {
  config.validate();
  Posterior post(data, net, config.hyper);
  return run_chain(post, config);
}

McmcTrace run_chain(const Posterior& post, const SamplerConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  ChainState s = initial_state(post, rng, config.fixed_lambda);

  const EpsilonMode mode = post.hyper().epsilon.mode;
  const bool sample_omega = post.q() > 0;
  const bool sample_epsilon = mode == EpsilonMode::kLognormal;
  const bool sample_lambda = !config.fixed_lambda.has_value();

  detail::AdaptiveBlock omega{"omega", config.steps.omega, config.target_rw, {}};
  detail::AdaptiveBlock gamma{"gamma", config.steps.gamma, config.target_mala, {}};
  detail::AdaptiveBlock alpha{"alpha", config.steps.alpha, config.target_mala, {}};
  detail::AdaptiveBlock epsilon{"epsilon",
                        config.epsilon_log_scale ? config.steps.log_epsilon : config.steps.epsilon,
                        config.target_rw, {}};
  detail::AdaptiveBlock lambda{"lambda", config.steps.lambda, config.target_rw, {}};
  detail::AdaptiveBlock joint_scale{"gamma_lambda_scale", config.steps.log_scale, config.target_rw,
                                    {}};
  detail::AdaptiveBlock gamma_scale{"gamma_scale", config.steps.log_scale, config.target_rw, {}};
  detail::AdaptiveBlock alpha_scale{"alpha_scale", config.steps.log_scale, config.target_rw, {}};
  const bool scale_moves = config.scale_moves;
  // a wider truncated-normal proposal than the support itself gains nothing
  std::optional<LaplacianPrecision> precond;
  if (config.gamma_precond_ridge > 0.0) {
    precond.emplace(post.precision(1.0).with_epsilon(
        mode == EpsilonMode::kIndependent ? 1.0 : config.gamma_precond_ridge));
  }
  const double lambda_step_cap = post.hyper().lambda_u * post.hyper().lambda_u;

  McmcTrace trace;
  trace.p = static_cast<std::size_t>(post.p());
  trace.q = static_cast<std::size_t>(post.q());
  trace.family = post.data().family.tag;
  trace.epsilon_mode = mode;
  trace.seed = config.seed;
  trace.n_iter = config.n_iter;
  trace.burn_in = config.burn_in;
  trace.thin = config.thin;
  trace.reserve((config.n_iter - config.burn_in) / config.thin);

  const bool check = config.check_consistency;
  for (std::size_t iter = 0; iter < config.n_iter; ++iter) {
    const bool burnin = iter < config.burn_in;
    if (sample_omega) omega.record(update_omega(s, post, omega.step, rng), burnin);
    gamma.record(update_gamma_mala(s, post, gamma.step, rng, precond ? &*precond : nullptr),
                 burnin);
    if (check) check_block(s, "gamma");
    update_xi(s.params);
    alpha.record(update_alpha_mala(s, post, alpha.step, rng), burnin);
    if (check) check_block(s, "alpha");
    update_sigma_gamma(s, post, rng);
    update_sigma_alpha(s, post, rng);
    if (scale_moves) {
      // the scale direction shared by gamma, lambda and the variances mixes slowly otherwise
      if (sample_lambda) {
        joint_scale.record(update_gamma_scale(s, post, joint_scale.step, rng, true), burnin);
      }
      gamma_scale.record(update_gamma_scale(s, post, gamma_scale.step, rng, false), burnin);
      alpha_scale.record(update_alpha_scale(s, post, alpha_scale.step, rng), burnin);
      if (check) check_block(s, "scale");
    }
    if (sample_epsilon) {
      epsilon.record(update_epsilon(s, post, epsilon.step, rng, config.epsilon_log_scale), burnin);
    }
    if (sample_lambda) {
      lambda.record(update_lambda(s, post, lambda.step, rng), burnin);
      if (check) check_block(s, "lambda");
    }

    update_noise_variance(s, post, rng);

    if (burnin && (iter + 1) % config.adapt_interval == 0) {
      for (auto* b : {&omega, &gamma, &alpha, &epsilon, &lambda, &joint_scale, &gamma_scale, &alpha_scale}) {
        b->adapt(config.adapt_factor);
      }
      lambda.step = std::min(lambda.step, lambda_step_cap);
    }
    if (config.average_final_steps && iter + 1 == config.burn_in / 2) {
      for (auto* b : {&omega, &gamma, &alpha, &epsilon, &lambda, &joint_scale, &gamma_scale, &alpha_scale}) b->restart_average();
    }
    if (iter + 1 == config.burn_in) {
      for (auto* b : {&omega, &gamma, &alpha, &epsilon, &lambda, &joint_scale, &gamma_scale, &alpha_scale}) {
        b->freeze(config.average_final_steps);
      }
    }
    if (!burnin && (iter + 1 - config.burn_in) % config.thin == 0) trace.push(s.params, s.loglik);
  }

  auto finish = [&](detail::AdaptiveBlock& b, bool active) {
    if (!active) return;
    if (config.burn_in == 0) b.stats.step_at_burnin_end = b.step;
    b.stats.final_step = b.step;
    trace.blocks[b.name] = b.stats;
  };
  finish(omega, sample_omega);
  finish(gamma, true);
  finish(alpha, true);
  finish(epsilon, sample_epsilon);
  finish(lambda, sample_lambda);
  finish(joint_scale, scale_moves && sample_lambda);
  finish(gamma_scale, scale_moves);
  finish(alpha_scale, scale_moves);
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

std::vector<McmcTrace> run_chains(const Dataset& data, const Network& net,
                                  const SamplerConfig& config, std::size_t chains,
                                  std::size_t workers) {
  config.validate();
  if (chains == 0) throw Error(ErrorCode::kConfig, "at least one chain is required");
  Posterior post(data, net, config.hyper);
  return detail::run_parallel(chains, workers, [&](std::size_t c) {
    SamplerConfig cfg = config;
    cfg.seed = derive_seed(config.seed, c);
    return run_chain(post, cfg);
  });
}

}  // namespace tglg
