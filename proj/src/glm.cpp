#include "tglg/glm.hpp"

#include <cmath>
#include <numbers>

#include "tglg/csv.hpp"
#include "tglg/error.hpp"

namespace tglg {

std::string_view family_name(Family f) noexcept {
  return f == Family::kGaussian ? "gaussian" : "logit";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian" || name == "linear") return Family::kGaussian;
  if (name == "logit" || name == "bernoulli_logit" || name == "logistic") {
    return Family::kBernoulliLogit;
  }
  throw Error(ErrorCode::kConfig, "unknown family '" + std::string(name) + "'");
}

GlmFamily GlmFamily::gaussian(double noise_variance) {
  if (!(noise_variance > 0.0)) {
    throw Error(ErrorCode::kParameter, "gaussian noise variance must be positive");
  }
  return {Family::kGaussian, noise_variance};
}

GlmFamily GlmFamily::logit() { return {Family::kBernoulliLogit, 1.0}; }

void Dataset::validate() const {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::kShape, "X has " + std::to_string(x.rows()) + " rows but y has " +
                                       std::to_string(y.size()) + " entries");
  }
  if (z.cols() > 0 && z.rows() != y.size()) {
    throw Error(ErrorCode::kShape, "Z has " + std::to_string(z.rows()) + " rows but y has " +
                                       std::to_string(y.size()) + " entries");
  }
  if (!x.allFinite() || !z.allFinite() || !y.allFinite()) {
    throw Error(ErrorCode::kNumeric, "dataset contains non-finite entries");
  }
  if (family.tag == Family::kBernoulliLogit) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) {
        throw Error(ErrorCode::kParameter,
                    "logit response must be 0/1; row " + std::to_string(i + 1) + " is " +
                        std::to_string(y[i]));
      }
    }
  } else if (!(family.noise_variance > 0.0)) {
    throw Error(ErrorCode::kParameter, "gaussian noise variance must be positive");
  }
}

Dataset Dataset::empty(Eigen::Index p, GlmFamily family, Eigen::Index q) {
  Dataset d;
  d.x = Eigen::MatrixXd(0, p);
  d.z = Eigen::MatrixXd(0, q);
  d.y = Eigen::VectorXd(0);
  d.family = family;
  return d;
}

double logistic(double h) noexcept {
  if (h >= 0.0) return 1.0 / (1.0 + std::exp(-h));
  const double e = std::exp(h);
  return e / (1.0 + e);
}

double log1p_exp(double h) noexcept {
  if (h > 0.0) return h + std::log1p(std::exp(-h));
  return std::log1p(std::exp(h));
}

namespace {

void check_predictor(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h) {
  if (h.size() != data.n()) {
    throw Error(ErrorCode::kShape, "linear predictor length " + std::to_string(h.size()) +
                                       " != n = " + std::to_string(data.n()));
  }
  if (!h.allFinite()) throw Error(ErrorCode::kNumeric, "non-finite linear predictor");
}

}  // namespace

double log_likelihood(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h) {
  return log_likelihood(data, h, data.family.noise_variance);
}

double log_likelihood(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h,
                      double noise_variance) {
  check_predictor(data, h);
  const auto& y = data.y;
  double total = 0.0;
  if (data.family.tag == Family::kGaussian) {
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi * noise_variance);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double r = y[i] - h[i];
      total -= 0.5 * r * r / noise_variance + log_norm;
    }
  } else {
    for (Eigen::Index i = 0; i < y.size(); ++i) total += h[i] * y[i] - log1p_exp(h[i]);
  }
  return total;
}

Eigen::VectorXd grad_h(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h) {
  return grad_h(data, h, data.family.noise_variance);
}

Eigen::VectorXd grad_h(const Dataset& data, const Eigen::Ref<const Eigen::VectorXd>& h,
                       double noise_variance) {
  check_predictor(data, h);
  Eigen::VectorXd g(h.size());
  if (data.family.tag == Family::kGaussian) {
    g = (data.y - h) / noise_variance;
  } else {
    for (Eigen::Index i = 0; i < h.size(); ++i) g[i] = data.y[i] - logistic(h[i]);
  }
  return g;
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& z, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& omega, const Eigen::VectorXd& beta) {
  if (x.cols() != beta.size()) {
    throw Error(ErrorCode::kShape, "X has " + std::to_string(x.cols()) +
                                       " columns but beta has length " +
                                       std::to_string(beta.size()));
  }
  Eigen::VectorXd h = x * beta;
  if (z.cols() > 0) {
    if (z.cols() != omega.size() || z.rows() != x.rows()) {
      throw Error(ErrorCode::kShape, "confounder matrix does not match omega / X");
    }
    h += z * omega;
  } else if (omega.size() != 0) {
    throw Error(ErrorCode::kShape, "omega given without confounder columns");
  }
  return h;
}

Eigen::VectorXd predict(const Eigen::MatrixXd& z, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& omega, const Eigen::VectorXd& beta,
                        Family family) {
  Eigen::VectorXd h = linear_predictor(z, x, omega, beta);
  if (family == Family::kBernoulliLogit) {
    for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = logistic(h[i]);
  }
  return h;
}

Dataset load_dataset(const std::filesystem::path& x_path,
                     const std::optional<std::filesystem::path>& z_path,
                     const std::filesystem::path& y_path, GlmFamily family) {
  Dataset d;
  d.x = read_matrix_csv(x_path);
  d.y = read_vector_csv(y_path);
  d.z = z_path ? read_matrix_csv(*z_path) : Eigen::MatrixXd(d.y.size(), 0);
  d.family = family;
  d.validate();
  return d;
}

}  // namespace tglg
