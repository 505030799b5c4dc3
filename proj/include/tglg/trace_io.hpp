#pragma once

#include <filesystem>
#include <string>

#include "tglg/sampler.hpp"

namespace tglg {

/// One row per kept sample: gamma_1..gamma_p, alpha_1..alpha_p,
/// omega_1..omega_q, lambda, sigma2_gamma, sigma2_alpha, epsilon,
/// sigma2_noise, log_likelihood.
void write_trace_csv(const McmcTrace& trace, const std::filesystem::path& path);

/// Metadata (dimensions, seed, run lengths, acceptance counters, wall time)
/// as a JSON object. `config_json`, if non-empty, must hold a JSON value and
/// is embedded under "config".
std::string trace_metadata_json(const McmcTrace& trace, const std::string& config_json = {});

/// Binary samples ("TGLGTRC1" magic, host byte order with an endianness
/// marker, float64 arrays) plus a JSON sidecar at `path` with extension
/// replaced by ".json".
void write_trace_binary(const McmcTrace& trace, const std::filesystem::path& path,
                        const std::string& config_json = {});

/// Reads a binary trace and its sidecar. Throws Error(kParse) on a bad magic,
/// a truncated file or a sidecar that disagrees with the payload.
McmcTrace read_trace_binary(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace tglg
