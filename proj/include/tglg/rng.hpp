#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace tglg {

/// SplitMix64 step; used to derive independent child seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(master ^ splitmix64(stream + 1));
}

/// Explicit random source handed to every stochastic operation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  /// Gamma(shape, rate = 1).
  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }
  /// Inverse-gamma with density proportional to x^{-shape-1} exp(-scale / x).
  double inverse_gamma(double shape, double scale);
  bool bernoulli(double prob) { return uniform() < prob; }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline double Rng::inverse_gamma(double shape, double scale) {
  const double g = gamma(shape);
  if (g <= 0.0) return std::numeric_limits<double>::max();
  return scale / g;
}

}  // namespace tglg
