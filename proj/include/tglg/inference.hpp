#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tglg/sampler.hpp"

namespace tglg {

/// Fraction of samples with |gamma_j| > lambda, using each sample's lambda.
/// Throws Error(kUndefined) on an empty trace.
std::vector<double> inclusion_probability(const McmcTrace& trace);
std::vector<double> inclusion_probability(std::span<const McmcTrace> traces);

/// sum_i alpha_j I_ij / sum_i I_ij, or nullopt for a node never selected.
std::vector<std::optional<double>> conditional_effect(const McmcTrace& trace);
std::vector<std::optional<double>> conditional_effect(std::span<const McmcTrace> traces);

/// {j : inclusion_j > 0.5}, 0-based.
std::vector<std::size_t> select_markers(std::span<const double> inclusion);

struct PsrfReport {
  std::vector<std::string> names;
  /// nullopt where the within-chain variance is zero.
  std::vector<std::optional<double>> psrf;
  /// 2.5% and 97.5% quantiles over the defined values (NaN if none).
  double lower = 0.0;
  double upper = 0.0;
  std::size_t undefined = 0;
};

/// Classic PSRF of one scalar across chains: sqrt(((N-1)/N W + B/N) / W).
/// Chains must have equal length >= 10; with split, each chain is halved
/// first. Returns nullopt when W = 0.
std::optional<double> psrf(std::span<const std::vector<double>> chains, bool split = false);

/// Extracts scalar series from a trace: {name, value at sample i}.
struct ParameterSelector {
  std::string name;
  std::function<double(const McmcTrace&, std::size_t)> value;
};

std::vector<ParameterSelector> beta_selectors(std::size_t p);
std::vector<ParameterSelector> gamma_selectors(std::size_t p);
ParameterSelector lambda_selector();

PsrfReport gelman_rubin(std::span<const McmcTrace> traces,
                        std::span<const ParameterSelector> selectors, bool split = false);

struct PosteriorSummary {
  std::vector<double> inclusion;
  std::vector<std::optional<double>> effect;
  std::vector<std::size_t> selected;
  std::size_t chains = 0;
  std::size_t samples = 0;
  std::string kind = "tglg";
  Family family = Family::kGaussian;
  std::optional<PsrfReport> psrf;
};

PosteriorSummary summarize(std::span<const McmcTrace> traces);

/// beta-hat_j = conditional effect for selected nodes, 0 elsewhere.
Eigen::VectorXd point_estimate(const PosteriorSummary& summary);

void write_summary_json(const PosteriorSummary& s, const std::filesystem::path& path);
PosteriorSummary read_summary_json(const std::filesystem::path& path);
/// node,inclusion,effect,selected (1-based node ids; empty effect when undefined)
void write_summary_csv(const PosteriorSummary& s, const std::filesystem::path& path);
/// One 1-based node id per line.
void write_selected_list(const PosteriorSummary& s, const std::filesystem::path& path);
void write_psrf_csv(const PsrfReport& r, const std::filesystem::path& path);

}  // namespace tglg
