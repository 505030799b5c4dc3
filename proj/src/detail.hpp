#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "tglg/sampler.hpp"

namespace tglg::detail {

// Step size of one Metropolis block with its acceptance counters.
struct AdaptiveBlock {
  std::string name;
  double step;
  double target;
  BlockStats stats;
  std::size_t window_proposed = 0;
  std::size_t window_accepted = 0;
  double log_step_sum = 0.0;
  std::size_t log_step_count = 0;

  void record(const Proposal& p, bool burnin) {
    if (burnin) {
      ++stats.burnin_proposed;
      stats.burnin_accepted += p.accepted;
      ++window_proposed;
      window_accepted += p.accepted;
    } else {
      ++stats.proposed;
      stats.accepted += p.accepted;
    }
    stats.nonfinite += p.nonfinite;
  }

  void adapt(double factor) {
    if (window_proposed == 0) return;
    const double rate =
        static_cast<double>(window_accepted) / static_cast<double>(window_proposed);
    step = adapt_step(step, rate, target, factor);
    log_step_sum += std::log(step);
    ++log_step_count;
    window_proposed = 0;
    window_accepted = 0;
  }

  void restart_average() {
    log_step_sum = 0.0;
    log_step_count = 0;
  }

  void freeze(bool average) {
    if (average && log_step_count > 0) {
      step = std::exp(log_step_sum / static_cast<double>(log_step_count));
    }
    stats.step_at_burnin_end = step;
  }
};

// Runs job(c) for c in [0, chains) on up to `workers` threads; the first
// failure is rethrown after every job finished.
template <typename Job>
auto run_parallel(std::size_t chains, std::size_t workers, Job job) {
  std::vector<decltype(job(std::size_t{0}))> traces(chains);
  std::vector<std::exception_ptr> errors(chains);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < chains; c = next++) {
      try {
        traces[c] = job(c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, chains);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return traces;
}

}  // namespace tglg::detail
