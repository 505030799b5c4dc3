#include "tglg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "tglg/error.hpp"

namespace tglg {

namespace {

void require_nonempty(std::span<const McmcTrace> traces) {
  if (traces.empty()) throw Error(ErrorCode::kUndefined, "no traces given");
  const std::size_t p = traces.front().p;
  for (const auto& t : traces) {
    if (t.size() == 0) throw Error(ErrorCode::kUndefined, "trace holds no samples");
    if (t.p != p) throw Error(ErrorCode::kShape, "traces disagree on p");
  }
}

// Type-7 sample quantile of sorted values.
double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

std::vector<double> inclusion_probability(const McmcTrace& trace) {
  return inclusion_probability(std::span<const McmcTrace>(&trace, 1));
}

std::vector<double> inclusion_probability(std::span<const McmcTrace> traces) {
  require_nonempty(traces);
  const std::size_t p = traces.front().p;
  std::vector<double> count(p, 0.0);
  std::size_t total = 0;
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < p; ++j) count[j] += t.selected_at(i, j);
    }
    total += t.size();
  }
  for (double& c : count) c /= static_cast<double>(total);
  return count;
}

std::vector<std::optional<double>> conditional_effect(const McmcTrace& trace) {
  return conditional_effect(std::span<const McmcTrace>(&trace, 1));
}

std::vector<std::optional<double>> conditional_effect(std::span<const McmcTrace> traces) {
  require_nonempty(traces);
  const std::size_t p = traces.front().p;
  std::vector<double> sum(p, 0.0);
  std::vector<std::size_t> hits(p, 0);
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        if (t.selected_at(i, j)) {
          sum[j] += t.alpha_at(i, j);
          ++hits[j];
        }
      }
    }
  }
  std::vector<std::optional<double>> out(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (hits[j]) out[j] = sum[j] / static_cast<double>(hits[j]);
  }
  return out;
}

std::vector<std::size_t> select_markers(std::span<const double> inclusion) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < inclusion.size(); ++j) {
    if (inclusion[j] > 0.5) out.push_back(j);
  }
  return out;
}

std::optional<double> psrf(std::span<const std::vector<double>> chains, bool split) {
  std::vector<std::span<const double>> parts;
  for (const auto& c : chains) {
    if (split) {
      const std::size_t half = c.size() / 2;
      parts.emplace_back(c.data(), half);
      // the odd middle draw is dropped
      parts.emplace_back(c.data() + c.size() - half, half);
    } else {
      parts.emplace_back(c.data(), c.size());
    }
  }
  if (parts.size() < 2) throw Error(ErrorCode::kParameter, "PSRF needs at least 2 chains");
  const std::size_t n = parts.front().size();
  for (const auto& c : parts) {
    if (c.size() != n) throw Error(ErrorCode::kShape, "PSRF chains must have equal length");
  }
  if (n < (split ? 5u : 10u)) throw Error(ErrorCode::kParameter, "PSRF needs chains of length >= 10");

  const double m = static_cast<double>(parts.size());
  const double dn = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : parts) {
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= dn;
    double ss = 0.0;
    for (double v : c) ss += (v - mean) * (v - mean);
    w += ss / (dn - 1.0);
    means.push_back(mean);
  }
  w /= m;
  if (!(w > 0.0)) return std::nullopt;
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= m;
  double b = 0.0;
  for (double v : means) b += (v - grand) * (v - grand);
  b *= dn / (m - 1.0);
  const double var = (dn - 1.0) / dn * w + b / dn;
  return std::sqrt(var / w);
}

std::vector<ParameterSelector> beta_selectors(std::size_t p) {
  std::vector<ParameterSelector> out;
  for (std::size_t j = 0; j < p; ++j) {
    out.push_back({"beta_" + std::to_string(j + 1),
                   [j](const McmcTrace& t, std::size_t i) { return t.beta_at(i, j); }});
  }
  return out;
}

std::vector<ParameterSelector> gamma_selectors(std::size_t p) {
  std::vector<ParameterSelector> out;
  for (std::size_t j = 0; j < p; ++j) {
    out.push_back({"gamma_" + std::to_string(j + 1),
                   [j](const McmcTrace& t, std::size_t i) { return t.gamma_at(i, j); }});
  }
  return out;
}

ParameterSelector lambda_selector() {
  return {"lambda", [](const McmcTrace& t, std::size_t i) { return t.lambda[i]; }};
}

PsrfReport gelman_rubin(std::span<const McmcTrace> traces,
                        std::span<const ParameterSelector> selectors, bool split) {
  if (traces.size() < 2) throw Error(ErrorCode::kParameter, "PSRF needs at least 2 chains");
  PsrfReport report;
  std::vector<double> defined;
  std::vector<std::vector<double>> series(traces.size());
  for (const auto& sel : selectors) {
    for (std::size_t c = 0; c < traces.size(); ++c) {
      series[c].resize(traces[c].size());
      for (std::size_t i = 0; i < traces[c].size(); ++i) series[c][i] = sel.value(traces[c], i);
    }
    auto r = psrf(series, split);
    report.names.push_back(sel.name);
    report.psrf.push_back(r);
    if (r) {
      defined.push_back(*r);
    } else {
      ++report.undefined;
    }
  }
  std::sort(defined.begin(), defined.end());
  report.lower = quantile_sorted(defined, 0.025);
  report.upper = quantile_sorted(defined, 0.975);
  return report;
}

PosteriorSummary summarize(std::span<const McmcTrace> traces) {
  PosteriorSummary s;
  s.inclusion = inclusion_probability(traces);
  s.effect = conditional_effect(traces);
  s.selected = select_markers(s.inclusion);
  s.chains = traces.size();
  for (const auto& t : traces) s.samples += t.size();
  s.kind = traces.front().kind;
  s.family = traces.front().family;
  return s;
}

Eigen::VectorXd point_estimate(const PosteriorSummary& summary) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(summary.inclusion.size()));
  for (std::size_t j : summary.selected) {
    beta[static_cast<Eigen::Index>(j)] = summary.effect[j].value_or(0.0);
  }
  return beta;
}

void write_summary_json(const PosteriorSummary& s, const std::filesystem::path& path) {
  nlohmann::json j;
  j["kind"] = s.kind;
  j["family"] = family_name(s.family);
  j["chains"] = s.chains;
  j["samples"] = s.samples;
  j["inclusion"] = s.inclusion;
  nlohmann::json effect = nlohmann::json::array();
  for (const auto& e : s.effect) effect.push_back(e ? nlohmann::json(*e) : nlohmann::json());
  j["effect"] = effect;
  std::vector<std::size_t> one_based;
  for (std::size_t v : s.selected) one_based.push_back(v + 1);
  j["selected"] = one_based;
  if (s.psrf) {
    nlohmann::json ps;
    ps["lower_2.5"] = s.psrf->lower;
    ps["upper_97.5"] = s.psrf->upper;
    ps["undefined"] = s.psrf->undefined;
    nlohmann::json vals = nlohmann::json::object();
    for (std::size_t k = 0; k < s.psrf->names.size(); ++k) {
      vals[s.psrf->names[k]] = s.psrf->psrf[k] ? nlohmann::json(*s.psrf->psrf[k]) : nlohmann::json();
    }
    ps["values"] = vals;
    j["psrf"] = ps;
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

PosteriorSummary read_summary_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    PosteriorSummary s;
    s.kind = j.at("kind").get<std::string>();
    s.family = parse_family(j.at("family").get<std::string>());
    s.chains = j.at("chains").get<std::size_t>();
    s.samples = j.at("samples").get<std::size_t>();
    s.inclusion = j.at("inclusion").get<std::vector<double>>();
    for (const auto& e : j.at("effect")) {
      s.effect.push_back(e.is_null() ? std::nullopt : std::optional<double>(e.get<double>()));
    }
    for (std::size_t v : j.at("selected").get<std::vector<std::size_t>>()) {
      if (v == 0) throw Error(ErrorCode::kParse, "selected node ids are 1-based");
      s.selected.push_back(v - 1);
    }
    if (s.effect.size() != s.inclusion.size()) {
      throw Error(ErrorCode::kParse, "summary effect and inclusion lengths differ");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_summary_csv(const PosteriorSummary& s, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "node,inclusion,effect,selected\n";
  for (std::size_t j = 0; j < s.inclusion.size(); ++j) {
    out << j + 1 << ',' << s.inclusion[j] << ',';
    if (s.effect[j]) out << *s.effect[j];
    out << ',' << (s.inclusion[j] > 0.5 ? 1 : 0) << '\n';
  }
}

void write_selected_list(const PosteriorSummary& s, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t j : s.selected) out << j + 1 << '\n';
}

void write_psrf_csv(const PsrfReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "parameter,psrf\n";
  for (std::size_t k = 0; k < r.names.size(); ++k) {
    out << r.names[k] << ',';
    if (r.psrf[k]) out << *r.psrf[k];
    out << '\n';
  }
}

}  // namespace tglg
