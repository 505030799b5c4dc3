#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tglg/glm.hpp"
#include "tglg/graph.hpp"

namespace tglg {

/// Type 1: the TF and all 10 targets of a marked subnetwork are informative.
/// Type 2: the TF and 5 randomly chosen targets.
enum class MarkerType { kType1, kType2 };

std::string_view marker_type_name(MarkerType t) noexcept;
MarkerType parse_marker_type(std::string_view name);
std::string_view marker_mode_name(MarkerMode m) noexcept;
MarkerMode parse_marker_mode(std::string_view name);

struct SimScenario {
  enum class Kind { kSimple, kScaleFree };

  Kind kind = Kind::kSimple;
  // simple
  std::size_t n_subnetworks = 3;
  MarkerType marker_type = MarkerType::kType2;
  // scale free
  std::size_t p = 1000;
  std::size_t ba_m = 1;
  std::size_t n_markers = 10;
  MarkerMode marker_mode = MarkerMode::kConnected;
  double mislabel_fraction = 0.0;

  Family family = Family::kGaussian;
  std::size_t n_train = 100;
  std::size_t n_test = 100;
  std::uint64_t seed = 1;

  /// Throws Error(kConfig) on non-positive counts or an out-of-range fraction.
  void validate() const;
};

struct MarkerAssignment {
  std::vector<std::size_t> markers;  ///< sorted, 0-based
  Eigen::VectorXd beta;
};

struct SimDataset {
  /// Network handed to the model (relabelled when mislabel_fraction > 0).
  Network net;
  /// Network that generated the covariates.
  Network true_net;
  Eigen::VectorXd true_beta;
  std::vector<std::size_t> true_markers;
  Dataset train;
  Dataset test;
  double noise_variance = 0.0;  ///< gaussian only
  double jitter = 0.0;          ///< diagonal jitter used to factor the covariance
};

/// n_sub disjoint stars of 11 nodes; node 11 s is the hub of subnetwork s.
Network make_simple_network(std::size_t n_sub);

/// Marks two random subnetworks. Effects are +-Unif(1, 3) with a random sign.
MarkerAssignment assign_markers_simple(std::size_t n_sub, MarkerType type, std::uint64_t seed);

/// k markers placed by pick_markers, effects as above.
MarkerAssignment assign_markers_scalefree(const Network& net, std::size_t k, MarkerMode mode,
                                          std::uint64_t seed);

/// 11 x 11 correlation block: TF-target 0.5, target-target 0.25.
Eigen::MatrixXd simple_block_covariance();

Eigen::MatrixXd gen_covariates_simple(std::size_t n, std::size_t n_sub, std::uint64_t seed);

/// Sigma_jk = 0.3^D(j,k), zero for unreachable pairs.
Eigen::MatrixXd scalefree_covariance(const Network& net);

/// Draws N(0, 0.3^D). The jitter actually added (0, 1e-8 or 1e-6) is written
/// to *jitter when given. Throws Error(kNumeric) if every attempt fails.
Eigen::MatrixXd gen_covariates_scalefree(std::size_t n, const Network& net, std::uint64_t seed,
                                         double* jitter = nullptr);

/// Noise variance sum(beta^2) / 3 used for the gaussian response.
double simulated_noise_variance(const Eigen::VectorXd& beta);

/// gaussian: y ~ N(X beta, sum(beta^2) / 3); logit: y ~ Bernoulli(logistic(X beta)).
/// Throws Error(kParameter) for an all-zero beta in the gaussian family.
Eigen::VectorXd gen_response(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                             Family family, std::uint64_t seed);

SimDataset make_scenario(const SimScenario& scenario);

}  // namespace tglg
