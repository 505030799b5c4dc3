#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tglg/ising.hpp"
#include "tglg/sampler.hpp"
#include "tglg/simulate.hpp"

namespace tglg {

/// Command-line values that take precedence over the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> workers;
  std::optional<std::string> family;
  std::optional<std::string> epsilon_mode;
  std::optional<std::string> baseline;
  std::optional<double> ising_b;
  std::optional<std::vector<double>> lambda_grid;
  std::optional<std::string> output;
};

enum class Baseline { kTglg, kIsing };

/// Effective settings of one command after layering built-in defaults, the
/// config file and the command-line overrides (later layers win). Paths from
/// the config file are resolved against its directory.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t chains = 1;
  std::size_t workers = 1;
  std::filesystem::path output;
  Family family = Family::kGaussian;
  Baseline baseline = Baseline::kTglg;
  bool trace_csv = false;

  // data for fit
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> x_path;
  std::optional<std::filesystem::path> z_path;
  std::optional<std::filesystem::path> y_path;
  std::optional<std::filesystem::path> edges_path;
  double noise_variance = 1.0;

  SamplerConfig sampler;
  IsingPrior ising;
  std::vector<double> lambda_grid;

  SimScenario scenario;
  std::size_t replicates = 1;

  std::vector<std::filesystem::path> eval_replicates;
  std::string fit_subdir = "fit";
  std::optional<std::filesystem::path> eval_output;

  std::optional<std::filesystem::path> diagnose_dir;
  bool diagnose_split = false;

  /// Canonical JSON of the effective config and its FNV-1a hash.
  std::string canonical;
  std::uint64_t hash = 0;
};

/// The built-in defaults as JSON; every accepted key appears here.
std::string default_config_json();

/// Throws Error(kConfig) on unknown keys, bad values or a missing seed.
RunConfig parse_run_config(std::string_view json_text, const CliOverrides& overrides,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const CliOverrides& overrides);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t v);

/// Writes rep_001 ... rep_R (edges.txt, x/y train and test CSVs, truth.json)
/// and manifest.json under config.output. Returns the replicate directories.
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config);

/// Fits one data set (or every replicate of a manifest). Writes traces,
/// summary.json/csv, selected.txt, acceptance.csv, psrf.csv (two or more
/// chains), lambda_grid.csv (grid mode) and fit.json. Returns the fit
/// directories.
std::vector<std::filesystem::path> cmd_fit(const RunConfig& config);

/// Scores fitted replicates against truth.json and the test split. Writes the
/// per-replicate and aggregated table; returns the CSV path.
std::filesystem::path cmd_evaluate(const RunConfig& config);

/// Recomputes the PSRF report from the binary traces of a fit directory and
/// returns the 97.5% quantile over parameters.
double cmd_diagnose(const RunConfig& config);

}  // namespace tglg
