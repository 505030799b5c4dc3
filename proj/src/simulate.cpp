#include "tglg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "tglg/error.hpp"
#include "tglg/rng.hpp"

namespace tglg {

namespace {

constexpr std::size_t kStarSize = 11;

// independent streams of one replicate seed
enum Stream : std::uint64_t {
  kMarkers = 1,
  kTrainX,
  kTrainY,
  kTestX,
  kTestY,
  kMislabel,
  kGraph,
};

double draw_effect(Rng& rng) {
  const double magnitude = 1.0 + 2.0 * rng.uniform();
  return rng.uniform() < 0.5 ? -magnitude : magnitude;
}

Eigen::MatrixXd standard_normal(std::size_t n, std::size_t p, Rng& rng) {
  Eigen::MatrixXd z(n, p);
  // row-major fill keeps the draws for row i independent of later rows
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) z(i, j) = rng.normal();
  }
  return z;
}

}  // namespace

std::string_view marker_type_name(MarkerType t) noexcept {
  return t == MarkerType::kType1 ? "type1" : "type2";
}

MarkerType parse_marker_type(std::string_view name) {
  if (name == "type1" || name == "1") return MarkerType::kType1;
  if (name == "type2" || name == "2") return MarkerType::kType2;
  throw Error(ErrorCode::kConfig, "unknown marker type '" + std::string(name) + "'");
}

std::string_view marker_mode_name(MarkerMode m) noexcept {
  return m == MarkerMode::kConnected ? "connected" : "disconnected";
}

MarkerMode parse_marker_mode(std::string_view name) {
  if (name == "connected") return MarkerMode::kConnected;
  if (name == "disconnected") return MarkerMode::kDisconnected;
  throw Error(ErrorCode::kConfig, "unknown marker mode '" + std::string(name) + "'");
}

void SimScenario::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  if (n_train == 0) fail("n_train must be positive");
  if (kind == Kind::kSimple) {
    if (n_subnetworks < 2) fail("a simple scenario needs at least 2 subnetworks");
  } else {
    if (p < 2) fail("scale-free scenario needs p >= 2");
    if (ba_m == 0) fail("ba_m must be positive");
    if (n_markers == 0 || n_markers > p) fail("n_markers must lie in [1, p]");
    if (!(mislabel_fraction >= 0.0 && mislabel_fraction <= 1.0)) {
      fail("mislabel_fraction must lie in [0, 1]");
    }
  }
}

Network make_simple_network(std::size_t n_sub) {
  if (n_sub == 0) throw Error(ErrorCode::kParameter, "need at least one subnetwork");
  std::vector<Edge> edges;
  edges.reserve(n_sub * (kStarSize - 1));
  for (std::size_t s = 0; s < n_sub; ++s) {
    const std::size_t hub = s * kStarSize;
    for (std::size_t t = 1; t < kStarSize; ++t) edges.emplace_back(hub, hub + t);
  }
  return Network(n_sub * kStarSize, std::move(edges));
}

MarkerAssignment assign_markers_simple(std::size_t n_sub, MarkerType type, std::uint64_t seed) {
  if (n_sub < 2) throw Error(ErrorCode::kParameter, "need at least two subnetworks");
  Rng rng(seed);
  std::vector<std::size_t> subs(n_sub);
  std::iota(subs.begin(), subs.end(), std::size_t{0});
  for (std::size_t i = 0; i < 2; ++i) std::swap(subs[i], subs[i + rng.index(n_sub - i)]);

  MarkerAssignment out;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::size_t hub = subs[i] * kStarSize;
    out.markers.push_back(hub);
    std::vector<std::size_t> targets(kStarSize - 1);
    std::iota(targets.begin(), targets.end(), hub + 1);
    const std::size_t keep = type == MarkerType::kType1 ? targets.size() : targets.size() / 2;
    for (std::size_t t = 0; t < keep; ++t) {
      std::swap(targets[t], targets[t + rng.index(targets.size() - t)]);
      out.markers.push_back(targets[t]);
    }
  }
  std::sort(out.markers.begin(), out.markers.end());
  out.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_sub * kStarSize));
  for (std::size_t j : out.markers) out.beta[static_cast<Eigen::Index>(j)] = draw_effect(rng);
  return out;
}

MarkerAssignment assign_markers_scalefree(const Network& net, std::size_t k, MarkerMode mode,
                                          std::uint64_t seed) {
  MarkerAssignment out;
  out.markers = pick_markers(net, k, mode, derive_seed(seed, 0));
  Rng rng(derive_seed(seed, 1));
  out.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.size()));
  for (std::size_t j : out.markers) out.beta[static_cast<Eigen::Index>(j)] = draw_effect(rng);
  return out;
}

Eigen::MatrixXd simple_block_covariance() {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(kStarSize, kStarSize, 0.25);
  s.row(0).setConstant(0.5);
  s.col(0).setConstant(0.5);
  s.diagonal().setOnes();
  return s;
}

Eigen::MatrixXd gen_covariates_simple(std::size_t n, std::size_t n_sub, std::uint64_t seed) {
  const Eigen::MatrixXd chol = simple_block_covariance().llt().matrixL();
  Rng rng(seed);
  const Eigen::MatrixXd z = standard_normal(n, n_sub * kStarSize, rng);
  Eigen::MatrixXd x(n, n_sub * kStarSize);
  for (std::size_t s = 0; s < n_sub; ++s) {
    const auto c = static_cast<Eigen::Index>(s * kStarSize);
    x.middleCols(c, kStarSize) = z.middleCols(c, kStarSize) * chol.transpose();
  }
  return x;
}

Eigen::MatrixXd scalefree_covariance(const Network& net) {
  const DistanceMatrix d = shortest_paths(net);
  const auto p = static_cast<Eigen::Index>(net.size());
  Eigen::MatrixXd s(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      const auto dist = d(static_cast<std::size_t>(j), static_cast<std::size_t>(k));
      s(j, k) = dist == DistanceMatrix::kUnreachable ? 0.0 : std::pow(0.3, dist);
    }
  }
  return s;
}

Eigen::MatrixXd gen_covariates_scalefree(std::size_t n, const Network& net, std::uint64_t seed,
                                         double* jitter) {
  const Eigen::MatrixXd sigma = scalefree_covariance(net);
  const auto p = sigma.rows();
  for (double add : {1e-8, 1e-6}) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma + add * Eigen::MatrixXd::Identity(p, p));
    if (llt.info() != Eigen::Success) continue;
    if (jitter) *jitter = add;
    Rng rng(seed);
    const Eigen::MatrixXd z = standard_normal(n, static_cast<std::size_t>(p), rng);
    return z * llt.matrixL().transpose();
  }
  throw Error(ErrorCode::kNumeric, "0.3^D covariance is not positive definite even with jitter 1e-6");
}

double simulated_noise_variance(const Eigen::VectorXd& beta) { return beta.squaredNorm() / 3.0; }

Eigen::VectorXd gen_response(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                             Family family, std::uint64_t seed) {
  if (x.cols() != beta.size()) {
    throw Error(ErrorCode::kShape, "X columns do not match the length of beta");
  }
  Rng rng(seed);
  const Eigen::VectorXd mean = x * beta;
  Eigen::VectorXd y(mean.size());
  if (family == Family::kGaussian) {
    const double var = simulated_noise_variance(beta);
    if (!(var > 0.0)) {
      throw Error(ErrorCode::kParameter, "gaussian response needs a nonzero beta (noise variance sum(beta^2)/3 is 0)");
    }
    const double sd = std::sqrt(var);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = mean[i] + sd * rng.normal();
  } else {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.uniform() < logistic(mean[i]) ? 1.0 : 0.0;
  }
  return y;
}

SimDataset make_scenario(const SimScenario& sc) {
  sc.validate();
  const std::uint64_t seed = sc.seed;
  SimDataset out;
  MarkerAssignment truth;
  Eigen::MatrixXd x_train, x_test;
  if (sc.kind == SimScenario::Kind::kSimple) {
    out.true_net = make_simple_network(sc.n_subnetworks);
    truth = assign_markers_simple(sc.n_subnetworks, sc.marker_type, derive_seed(seed, kMarkers));
    x_train = gen_covariates_simple(sc.n_train, sc.n_subnetworks, derive_seed(seed, kTrainX));
    x_test = gen_covariates_simple(sc.n_test, sc.n_subnetworks, derive_seed(seed, kTestX));
  } else {
    out.true_net = barabasi_game(sc.p, sc.ba_m, derive_seed(seed, kGraph));
    truth = assign_markers_scalefree(out.true_net, sc.n_markers, sc.marker_mode,
                                     derive_seed(seed, kMarkers));
    x_train = gen_covariates_scalefree(sc.n_train, out.true_net, derive_seed(seed, kTrainX),
                                       &out.jitter);
    x_test = gen_covariates_scalefree(sc.n_test, out.true_net, derive_seed(seed, kTestX));
  }
  out.net = sc.mislabel_fraction > 0.0
                ? permute_labels(out.true_net, sc.mislabel_fraction, derive_seed(seed, kMislabel))
                : out.true_net;
  out.true_markers = std::move(truth.markers);
  out.true_beta = std::move(truth.beta);

  GlmFamily family = GlmFamily::logit();
  if (sc.family == Family::kGaussian) {
    out.noise_variance = simulated_noise_variance(out.true_beta);
    family = GlmFamily::gaussian(out.noise_variance);
  }
  auto make = [&](Eigen::MatrixXd x, std::uint64_t y_seed) {
    Dataset d;
    d.y = gen_response(x, out.true_beta, sc.family, y_seed);
    d.z = Eigen::MatrixXd(x.rows(), 0);
    d.x = std::move(x);
    d.family = family;
    return d;
  };
  out.train = make(std::move(x_train), derive_seed(seed, kTrainY));
  out.test = make(std::move(x_test), derive_seed(seed, kTestY));
  return out;
}

}  // namespace tglg
