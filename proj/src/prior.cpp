#include "tglg/prior.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "tglg/error.hpp"

namespace tglg {

std::string_view epsilon_mode_name(EpsilonMode m) noexcept {
  switch (m) {
    case EpsilonMode::kFixed: return "fixed";
    case EpsilonMode::kLognormal: return "lognormal";
    case EpsilonMode::kIndependent: return "independent";
  }
  return "unknown";
}

EpsilonMode parse_epsilon_mode(std::string_view name) {
  if (name == "fixed") return EpsilonMode::kFixed;
  if (name == "lognormal") return EpsilonMode::kLognormal;
  if (name == "independent") return EpsilonMode::kIndependent;
  throw Error(ErrorCode::kConfig, "unknown epsilon mode '" + std::string(name) + "'");
}

void TglgHyper::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kConfig, std::string(name) + " must be positive and finite");
    }
  };
  positive(lambda_u, "lambda_u");
  positive(a_gamma, "a_gamma");
  positive(b_gamma, "b_gamma");
  positive(a_alpha, "a_alpha");
  positive(b_alpha, "b_alpha");
  positive(a_noise, "a_noise");
  positive(b_noise, "b_noise");
  positive(sigma2_omega, "sigma2_omega");
  positive(eps0, "eps0");
  if (epsilon.mode == EpsilonMode::kFixed) positive(epsilon.value, "epsilon.value");
  if (epsilon.mode == EpsilonMode::kLognormal) {
    positive(epsilon.sigma2, "epsilon.sigma2");
    if (!std::isfinite(epsilon.mu)) throw Error(ErrorCode::kConfig, "epsilon.mu must be finite");
  }
}

struct LaplacianPrecision::Factor {
  SparseMatrix base;
  SparseMatrix q;
  // fill-reducing ordering; depends only on the pattern, so it is shared
  // between precisions that differ in epsilon
  std::shared_ptr<const Permutation> perm;
  SparseMatrix lower;  // L with P Q P^T = L L^T
};

namespace {

std::shared_ptr<const LaplacianPrecision::Permutation> amd_ordering(const SparseMatrix& q) {
  Eigen::AMDOrdering<int> amd;
  LaplacianPrecision::Permutation pinv;
  amd(q, pinv);
  return std::make_shared<const LaplacianPrecision::Permutation>(pinv.inverse());
}

}  // namespace

LaplacianPrecision::LaplacianPrecision(const SparseMatrix& base, double epsilon)
    : LaplacianPrecision(base, epsilon, nullptr) {}

LaplacianPrecision::LaplacianPrecision(const SparseMatrix& base, double epsilon,
                                       std::shared_ptr<const Permutation> perm)
    : epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kFactorization,
                "precision ridge epsilon must be positive, got " + std::to_string(epsilon));
  }
  if (base.rows() != base.cols()) {
    throw Error(ErrorCode::kShape, "precision base matrix must be square");
  }
  auto f = std::make_shared<Factor>();
  f->base = base;
  SparseMatrix identity(base.rows(), base.cols());
  identity.setIdentity();
  f->q = base + epsilon * identity;
  f->q.makeCompressed();
  f->perm = perm ? std::move(perm) : amd_ordering(f->q);
  SparseMatrix permuted = (*f->perm) * f->q * f->perm->transpose();
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>> llt(permuted);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kFactorization,
                "Cholesky factorization of L + eps I failed (eps = " +
                    std::to_string(epsilon) + ")");
  }
  f->lower = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < f->lower.cols(); ++j) {
    log_det += std::log(f->lower.coeff(j, j));
  }
  log_det_ = 2.0 * log_det;
  if (!std::isfinite(log_det_)) {
    throw Error(ErrorCode::kFactorization, "log-determinant of L + eps I is not finite");
  }
  factor_ = std::move(f);
}

Eigen::Index LaplacianPrecision::size() const noexcept {
  return factor_ ? factor_->q.rows() : 0;
}

const SparseMatrix& LaplacianPrecision::matrix() const { return factor_->q; }
const SparseMatrix& LaplacianPrecision::base() const { return factor_->base; }

Eigen::VectorXd LaplacianPrecision::multiply(const Eigen::VectorXd& v) const {
  return factor_->q * v;
}

Eigen::VectorXd LaplacianPrecision::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = (*factor_->perm) * b;
  factor_->lower.triangularView<Eigen::Lower>().solveInPlace(x);
  factor_->lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return factor_->perm->transpose() * x;
}

double LaplacianPrecision::quad_form(const Eigen::VectorXd& v) const {
  return v.dot(factor_->q * v);
}

Eigen::VectorXd LaplacianPrecision::whiten_inverse(const Eigen::VectorXd& z) const {
  Eigen::VectorXd x = z;
  factor_->lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return factor_->perm->transpose() * x;
}

Eigen::VectorXd LaplacianPrecision::whiten(const Eigen::VectorXd& v) const {
  Eigen::VectorXd pv = (*factor_->perm) * v;
  return factor_->lower.transpose() * pv;
}

LaplacianPrecision LaplacianPrecision::with_epsilon(double epsilon) const {
  return LaplacianPrecision(factor_->base, epsilon, factor_->perm);
}

Eigen::MatrixXd LaplacianPrecision::reconstruct_dense() const {
  const Eigen::MatrixXd l(factor_->lower);
  Eigen::MatrixXd llt = l * l.transpose();
  return factor_->perm->transpose() * llt * (*factor_->perm);
}

LaplacianPrecision build_precision(const SparseMatrix& laplacian, double epsilon) {
  return LaplacianPrecision(laplacian, epsilon);
}

Eigen::VectorXd hard_threshold(const Eigen::VectorXd& gamma, double lambda) {
  return (gamma.array().abs() > lambda).cast<double>().matrix();
}

double smooth_threshold(double gamma, double lambda, double eps0) {
  const double u = (gamma * gamma - lambda * lambda) / eps0;
  // 1/2 + atan(u)/pi, rewritten through atan(1/|u|) to keep relative accuracy
  // in both tails.
  if (u < 0.0) return std::atan(-1.0 / u) / std::numbers::pi;
  if (u > 0.0) return 1.0 - std::atan(1.0 / u) / std::numbers::pi;
  return 0.5;
}

double smooth_threshold_grad(double alpha, double gamma, double lambda, double eps0) {
  const double u = (gamma * gamma - lambda * lambda) / eps0;
  return alpha * (2.0 * gamma / eps0) / (std::numbers::pi * (1.0 + u * u));
}

Eigen::VectorXd compose_beta(const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma,
                             double lambda, ThresholdMode mode, double eps0) {
  if (alpha.size() != gamma.size()) {
    throw Error(ErrorCode::kShape, "alpha and gamma lengths differ");
  }
  if (mode == ThresholdMode::kHard) {
    return alpha.cwiseProduct(hard_threshold(gamma, lambda));
  }
  Eigen::VectorXd beta(alpha.size());
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    beta[j] = alpha[j] * smooth_threshold(gamma[j], lambda, eps0);
  }
  return beta;
}

double gamma_log_prior(const Eigen::VectorXd& gamma, double sigma2_gamma,
                       const LaplacianPrecision& prec) {
  if (gamma.size() != prec.size()) throw Error(ErrorCode::kShape, "gamma length mismatch");
  const double p = static_cast<double>(gamma.size());
  return -0.5 * prec.quad_form(gamma) / sigma2_gamma + 0.5 * prec.log_det() -
         0.5 * p * std::log(2.0 * std::numbers::pi * sigma2_gamma);
}

Eigen::VectorXd gamma_log_prior_grad(const Eigen::VectorXd& gamma, double sigma2_gamma,
                                     const LaplacianPrecision& prec) {
  if (gamma.size() != prec.size()) throw Error(ErrorCode::kShape, "gamma length mismatch");
  return -prec.multiply(gamma) / sigma2_gamma;
}

Eigen::VectorXd sample_gamma_prior(const LaplacianPrecision& prec, double sigma2_gamma,
                                   Rng& rng) {
  Eigen::VectorXd z(prec.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
  return std::sqrt(sigma2_gamma) * prec.whiten_inverse(z);
}

Eigen::VectorXd sample_gamma_prior(const LaplacianPrecision& prec, double sigma2_gamma,
                                   std::uint64_t seed) {
  Rng rng(seed);
  return sample_gamma_prior(prec, sigma2_gamma, rng);
}

void ModelState::refresh() {
  selected = hard_threshold(gamma, lambda);
  beta = alpha.cwiseProduct(selected);
}

bool ModelState::consistent() const {
  if (selected.size() != gamma.size() || beta.size() != gamma.size()) return false;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    const bool on = std::abs(gamma[j]) > lambda;
    if (selected[j] != (on ? 1.0 : 0.0)) return false;
    if (beta[j] != (on ? alpha[j] : 0.0)) return false;
  }
  return true;
}

std::size_t ModelState::selected_count() const {
  return static_cast<std::size_t>((selected.array() > 0.5).count());
}

namespace {

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

bool operator==(const ModelState& a, const ModelState& b) {
  return same_bits(a.omega, b.omega) && same_bits(a.alpha, b.alpha) &&
         same_bits(a.gamma, b.gamma) && same_bits(a.lambda, b.lambda) &&
         same_bits(a.epsilon, b.epsilon) && same_bits(a.sigma2_gamma, b.sigma2_gamma) &&
         same_bits(a.sigma2_alpha, b.sigma2_alpha) &&
         same_bits(a.sigma2_noise, b.sigma2_noise) && same_bits(a.selected, b.selected) &&
         same_bits(a.beta, b.beta);
}

}  // namespace tglg
