#include "tglg/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "detail.hpp"
#include "tglg/csv.hpp"
#include "tglg/error.hpp"
#include "tglg/glm.hpp"
#include "tglg/inference.hpp"
#include "tglg/metrics.hpp"
#include "tglg/trace_io.hpp"

#ifndef TGLG_VERSION
#define TGLG_VERSION "0.0.0"
#endif

namespace tglg {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const char* kDefaults = R"({
  "seed": null,
  "chains": 1,
  "workers": 1,
  "output": "out",
  "family": "gaussian",
  "baseline": "tglg",
  "trace_csv": false,
  "data": {
    "dir": null,
    "manifest": null,
    "x": null,
    "z": null,
    "y": null,
    "edges": null,
    "noise_variance": 1.0
  },
  "sampler": {
    "n_iter": 30000,
    "burn_in": 20000,
    "thin": 1,
    "target_mala": 0.5,
    "target_rw": 0.3,
    "real_data_targets": false,
    "adapt_interval": 50,
    "adapt_factor": 1.0,
    "gamma_precond_ridge": 0.0,
    "average_final_steps": true,
    "epsilon_log_scale": true,
    "scale_moves": true,
    "fixed_lambda": null,
    "check_consistency": false,
    "steps": {
      "omega": 0.01,
      "gamma": 0.05,
      "alpha": 0.005,
      "epsilon": 1e-6,
      "log_epsilon": 0.25,
      "log_scale": 0.05,
      "lambda": 0.01
    }
  },
  "prior": {
    "lambda_u": 10.0,
    "a_gamma": 0.01,
    "b_gamma": 0.01,
    "a_alpha": 0.01,
    "b_alpha": 0.01,
    "a_noise": 0.01,
    "b_noise": 0.01,
    "sigma2_omega": 50.0,
    "eps0": 1e-8,
    "epsilon": {"mode": "lognormal", "value": 1e-5, "mu": -5.0, "sigma2": 9.0}
  },
  "ising": {"a": -2.0, "b": 7.0, "sigma2_beta": 1.0},
  "lambda_grid": [],
  "scenario": {
    "kind": "simple",
    "replicates": 1,
    "n_subnetworks": 3,
    "marker_type": "type2",
    "p": 1000,
    "ba_m": 1,
    "n_markers": 10,
    "marker_mode": "connected",
    "mislabel_fraction": 0.0,
    "n_train": 100,
    "n_test": 100
  },
  "evaluate": {"replicates": [], "manifest": null, "fit_subdir": "fit", "output": null},
  "diagnose": {"fit_dir": null, "split": false}
})";

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

// Every key of `given` must exist in `known`; null defaults accept any value.
void check_keys(const Json& known, const Json& given, const std::string& prefix) {
  if (!given.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    if (!known.contains(key)) config_error("unknown config key '" + prefix + key + "'");
    const Json& k = known.at(key);
    if (k.is_object()) {
      if (!value.is_object() && !value.is_null()) {
        config_error("config key '" + prefix + key + "' must be a section");
      }
      check_keys(k, value, prefix + key + ".");
    }
  }
}

template <typename T>
T get(const Json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    config_error("config key '" + where + key + "' has the wrong type");
  }
}

std::optional<fs::path> get_path(const Json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) config_error(std::string("path '") + key + "' must be a string");
  fs::path p = j.at(key).get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

SimScenario::Kind parse_kind(const std::string& s) {
  if (s == "simple") return SimScenario::Kind::kSimple;
  if (s == "scale_free" || s == "scalefree") return SimScenario::Kind::kScaleFree;
  config_error("unknown scenario kind '" + s + "'");
}

Baseline parse_baseline(const std::string& s) {
  if (s == "tglg") return Baseline::kTglg;
  if (s == "ising") return Baseline::kIsing;
  config_error("unknown baseline '" + s + "' (expected tglg or ising)");
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
  }
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::kIo, "missing " + what + ": " + p.string());
}

std::string rep_name(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rep_%03zu", r + 1);
  return buf;
}

Json versions() {
  return Json{{"tglg", TGLG_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__}};
}

std::vector<std::size_t> one_based(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) ++x;
  return out;
}

std::vector<fs::path> manifest_replicates(const fs::path& manifest) {
  const Json m = read_json_file(manifest);
  std::vector<fs::path> out;
  try {
    for (const auto& r : m.at("replicates")) {
      out.push_back(manifest.parent_path() / r.at("dir").get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, manifest.string() + ": " + e.what());
  }
  return out;
}

struct FitInput {
  Dataset data;
  Network net;
};

FitInput load_fit_input(const RunConfig& c, const std::optional<fs::path>& dir) {
  std::optional<fs::path> x = c.x_path, z = c.z_path, y = c.y_path, edges = c.edges_path;
  if (dir) {
    x = *dir / "x_train.csv";
    y = *dir / "y_train.csv";
    edges = *dir / "edges.txt";
    z = fs::is_regular_file(*dir / "z_train.csv") ? std::optional(*dir / "z_train.csv")
                                                   : std::nullopt;
  }
  if (!x || !y || !edges) config_error("fit needs data.x, data.y and data.edges (or data.dir)");
  require_file(*x, "covariate file");
  require_file(*y, "response file");
  require_file(*edges, "edge list");
  if (z) require_file(*z, "confounder file");
  const GlmFamily fam = c.family == Family::kGaussian ? GlmFamily::gaussian(c.noise_variance)
                                                      : GlmFamily::logit();
  FitInput in{load_dataset(*x, z, *y, fam), load_edge_list(*edges)};
  if (static_cast<std::size_t>(in.data.p()) != in.net.size()) {
    throw Error(ErrorCode::kShape, "data has p = " + std::to_string(in.data.p()) +
                                       " covariates but the graph has " +
                                       std::to_string(in.net.size()) + " nodes");
  }
  return in;
}

std::vector<McmcTrace> run_fit_chains(const RunConfig& c, const FitInput& in,
                                      const SamplerConfig& sc) {
  if (c.baseline == Baseline::kIsing) {
    return run_ising_chains(in.data, in.net, c.ising, sc, c.chains, c.workers);
  }
  return run_chains(in.data, in.net, sc, c.chains, c.workers);
}

double mean_loglik(const std::vector<McmcTrace>& traces) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : traces) {
    for (double v : t.log_likelihood) sum += v;
    n += t.size();
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<ParameterSelector> psrf_selectors(const McmcTrace& t) {
  auto sel = beta_selectors(t.p);
  if (t.kind == "tglg") sel.push_back(lambda_selector());
  return sel;
}

void write_acceptance(const std::vector<McmcTrace>& traces, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(8);
  out << "chain,block,burnin_rate,rate,step,nonfinite\n";
  for (std::size_t c = 0; c < traces.size(); ++c) {
    for (const auto& [name, b] : traces[c].blocks) {
      const double burn = b.burnin_proposed ? static_cast<double>(b.burnin_accepted) /
                                                  static_cast<double>(b.burnin_proposed)
                                            : 0.0;
      out << c + 1 << ',' << name << ',' << burn << ',' << b.acceptance_rate() << ','
          << b.final_step << ',' << b.nonfinite << '\n';
    }
  }
}

fs::path fit_one(const RunConfig& c, const std::optional<fs::path>& dir, const fs::path& out_dir) {
  // everything is validated before any sampling starts
  const FitInput in = load_fit_input(c, dir);
  SamplerConfig sc = c.sampler;
  sc.seed = c.seed;
  sc.validate();
  if (c.baseline == Baseline::kIsing) {
    c.ising.validate();
    if (!c.lambda_grid.empty()) config_error("--lambda-grid applies to the tglg model only");
  } else {
    Posterior check(in.data, in.net, sc.hyper);
  }
  for (double l : c.lambda_grid) {
    if (!(l >= 0.0 && l <= sc.hyper.lambda_u)) {
      config_error("lambda grid value " + std::to_string(l) + " outside [0, lambda_u]");
    }
  }
  ensure_dir(out_dir);

  Json fit_meta;
  std::vector<McmcTrace> traces;
  if (c.lambda_grid.empty()) {
    traces = run_fit_chains(c, in, sc);
  } else {
    // profile over fixed lambda values, keep the best mean log-likelihood
    std::ofstream grid(out_dir / "lambda_grid.csv");
    if (!grid) throw Error(ErrorCode::kIo, "cannot write " + (out_dir / "lambda_grid.csv").string());
    grid.precision(10);
    grid << "lambda,mean_log_likelihood\n";
    double best = -std::numeric_limits<double>::infinity();
    double best_lambda = c.lambda_grid.front();
    for (double l : c.lambda_grid) {
      sc.fixed_lambda = l;
      auto t = run_fit_chains(c, in, sc);
      const double ll = mean_loglik(t);
      grid << l << ',' << ll << '\n';
      if (ll > best || traces.empty()) {
        best = ll;
        best_lambda = l;
        traces = std::move(t);
      }
    }
    fit_meta["lambda"] = best_lambda;
  }

  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const fs::path stem = out_dir / ("chain_" + std::to_string(k + 1));
    write_trace_binary(traces[k], fs::path(stem).replace_extension(".bin"), c.canonical);
    if (c.trace_csv) write_trace_csv(traces[k], fs::path(stem).replace_extension(".csv"));
    seeds.push_back(traces[k].seed);
  }
  PosteriorSummary summary = summarize(traces);
  if (traces.size() >= 2) {
    const auto sel = psrf_selectors(traces.front());
    summary.psrf = gelman_rubin(traces, sel);
    write_psrf_csv(*summary.psrf, out_dir / "psrf.csv");
  }
  write_summary_json(summary, out_dir / "summary.json");
  write_summary_csv(summary, out_dir / "summary.csv");
  write_selected_list(summary, out_dir / "selected.txt");
  write_acceptance(traces, out_dir / "acceptance.csv");

  double wall = 0.0;
  for (const auto& t : traces) wall += t.wall_seconds;
  fit_meta["config_hash"] = hex64(c.hash);
  fit_meta["versions"] = versions();
  fit_meta["kind"] = traces.front().kind;
  fit_meta["family"] = family_name(c.family);
  fit_meta["chains"] = traces.size();
  fit_meta["chain_seeds"] = seeds;
  fit_meta["selected"] = one_based(summary.selected);
  fit_meta["wall_seconds"] = wall;
  if (summary.psrf) fit_meta["psrf_upper"] = summary.psrf->upper;
  write_json_file(fit_meta, out_dir / "fit.json");
  return out_dir;
}

std::vector<fs::path> replicate_list(const RunConfig& c) {
  std::vector<fs::path> reps = c.eval_replicates;
  if (c.manifest) {
    auto more = manifest_replicates(*c.manifest);
    reps.insert(reps.end(), more.begin(), more.end());
  }
  return reps;
}

}  // namespace

std::string default_config_json() { return Json::parse(kDefaults).dump(2); }

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunConfig parse_run_config(std::string_view json_text, const CliOverrides& o,
                           const fs::path& base_dir) {
  const Json defaults = Json::parse(kDefaults);
  Json file;
  try {
    file = json_text.empty() ? Json::object() : Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
  if (!file.is_object()) config_error("config must be a JSON object");
  check_keys(defaults, file, "");

  Json j = defaults;
  j.merge_patch(file);
  if (o.seed) j["seed"] = *o.seed;
  if (o.chains) j["chains"] = *o.chains;
  if (o.workers) j["workers"] = *o.workers;
  if (o.family) j["family"] = *o.family;
  if (o.epsilon_mode) j["prior"]["epsilon"]["mode"] = *o.epsilon_mode;
  if (o.baseline) j["baseline"] = *o.baseline;
  if (o.ising_b) j["ising"]["b"] = *o.ising_b;
  if (o.lambda_grid) j["lambda_grid"] = *o.lambda_grid;

  RunConfig c;
  if (!j.contains("seed") || j["seed"].is_null()) {
    config_error("a seed is required (config key 'seed' or --seed)");
  }
  c.seed = get<std::uint64_t>(j, "seed", "");
  c.chains = get<std::size_t>(j, "chains", "");
  c.workers = get<std::size_t>(j, "workers", "");
  if (c.chains == 0) config_error("chains must be at least 1");
  if (c.workers == 0) config_error("workers must be at least 1");
  c.family = parse_family(get<std::string>(j, "family", ""));
  c.baseline = parse_baseline(get<std::string>(j, "baseline", ""));
  c.trace_csv = get<bool>(j, "trace_csv", "");
  c.output = o.output ? fs::path(*o.output) : *get_path(j, "output", base_dir);

  const Json& d = j["data"];
  c.data_dir = get_path(d, "dir", base_dir);
  c.manifest = get_path(d, "manifest", base_dir);
  c.x_path = get_path(d, "x", base_dir);
  c.z_path = get_path(d, "z", base_dir);
  c.y_path = get_path(d, "y", base_dir);
  c.edges_path = get_path(d, "edges", base_dir);
  c.noise_variance = get<double>(d, "noise_variance", "data.");
  if (!(c.noise_variance > 0.0)) config_error("data.noise_variance must be positive");

  const Json& s = j["sampler"];
  SamplerConfig& sc = c.sampler;
  sc.n_iter = get<std::size_t>(s, "n_iter", "sampler.");
  sc.burn_in = get<std::size_t>(s, "burn_in", "sampler.");
  sc.thin = get<std::size_t>(s, "thin", "sampler.");
  sc.target_mala = get<double>(s, "target_mala", "sampler.");
  sc.target_rw = get<double>(s, "target_rw", "sampler.");
  if (get<bool>(s, "real_data_targets", "sampler.")) sc.use_real_data_targets();
  sc.adapt_interval = get<std::size_t>(s, "adapt_interval", "sampler.");
  sc.adapt_factor = get<double>(s, "adapt_factor", "sampler.");
  sc.gamma_precond_ridge = get<double>(s, "gamma_precond_ridge", "sampler.");
  sc.average_final_steps = get<bool>(s, "average_final_steps", "sampler.");
  sc.epsilon_log_scale = get<bool>(s, "epsilon_log_scale", "sampler.");
  sc.scale_moves = get<bool>(s, "scale_moves", "sampler.");
  sc.check_consistency = get<bool>(s, "check_consistency", "sampler.");
  if (s.contains("fixed_lambda") && !s["fixed_lambda"].is_null()) {
    sc.fixed_lambda = get<double>(s, "fixed_lambda", "sampler.");
  }
  const Json& st = s["steps"];
  sc.steps.omega = get<double>(st, "omega", "sampler.steps.");
  sc.steps.gamma = get<double>(st, "gamma", "sampler.steps.");
  sc.steps.alpha = get<double>(st, "alpha", "sampler.steps.");
  sc.steps.epsilon = get<double>(st, "epsilon", "sampler.steps.");
  sc.steps.log_epsilon = get<double>(st, "log_epsilon", "sampler.steps.");
  sc.steps.log_scale = get<double>(st, "log_scale", "sampler.steps.");
  sc.steps.lambda = get<double>(st, "lambda", "sampler.steps.");

  const Json& p = j["prior"];
  TglgHyper& h = sc.hyper;
  h.lambda_u = get<double>(p, "lambda_u", "prior.");
  h.a_gamma = get<double>(p, "a_gamma", "prior.");
  h.b_gamma = get<double>(p, "b_gamma", "prior.");
  h.a_alpha = get<double>(p, "a_alpha", "prior.");
  h.b_alpha = get<double>(p, "b_alpha", "prior.");
  h.a_noise = get<double>(p, "a_noise", "prior.");
  h.b_noise = get<double>(p, "b_noise", "prior.");
  h.sigma2_omega = get<double>(p, "sigma2_omega", "prior.");
  h.eps0 = get<double>(p, "eps0", "prior.");
  const Json& e = p["epsilon"];
  h.epsilon.mode = parse_epsilon_mode(get<std::string>(e, "mode", "prior.epsilon."));
  h.epsilon.value = get<double>(e, "value", "prior.epsilon.");
  h.epsilon.mu = get<double>(e, "mu", "prior.epsilon.");
  h.epsilon.sigma2 = get<double>(e, "sigma2", "prior.epsilon.");
  sc.seed = c.seed;
  sc.validate();

  const Json& is = j["ising"];
  c.ising.a = get<double>(is, "a", "ising.");
  c.ising.b = get<double>(is, "b", "ising.");
  c.ising.sigma2_beta = get<double>(is, "sigma2_beta", "ising.");
  c.ising.validate();
  c.lambda_grid = get<std::vector<double>>(j, "lambda_grid", "");

  const Json& sn = j["scenario"];
  SimScenario& sim = c.scenario;
  sim.kind = parse_kind(get<std::string>(sn, "kind", "scenario."));
  c.replicates = get<std::size_t>(sn, "replicates", "scenario.");
  if (c.replicates == 0) config_error("scenario.replicates must be at least 1");
  sim.n_subnetworks = get<std::size_t>(sn, "n_subnetworks", "scenario.");
  sim.marker_type = parse_marker_type(get<std::string>(sn, "marker_type", "scenario."));
  sim.p = get<std::size_t>(sn, "p", "scenario.");
  sim.ba_m = get<std::size_t>(sn, "ba_m", "scenario.");
  sim.n_markers = get<std::size_t>(sn, "n_markers", "scenario.");
  sim.marker_mode = parse_marker_mode(get<std::string>(sn, "marker_mode", "scenario."));
  sim.mislabel_fraction = get<double>(sn, "mislabel_fraction", "scenario.");
  sim.n_train = get<std::size_t>(sn, "n_train", "scenario.");
  sim.n_test = get<std::size_t>(sn, "n_test", "scenario.");
  sim.family = c.family;
  sim.seed = c.seed;
  sim.validate();

  const Json& ev = j["evaluate"];
  for (const auto& r : ev["replicates"]) {
    if (!r.is_string()) config_error("evaluate.replicates must list directory paths");
    fs::path rp = r.get<std::string>();
    c.eval_replicates.push_back(rp.is_relative() && !base_dir.empty() ? base_dir / rp : rp);
  }
  if (auto m = get_path(ev, "manifest", base_dir)) c.manifest = m;
  c.fit_subdir = get<std::string>(ev, "fit_subdir", "evaluate.");
  c.eval_output = get_path(ev, "output", base_dir);

  const Json& dg = j["diagnose"];
  c.diagnose_dir = get_path(dg, "fit_dir", base_dir);
  c.diagnose_split = get<bool>(dg, "split", "diagnose.");

  c.canonical = j.dump();
  c.hash = fnv1a64(c.canonical);
  return c;
}

RunConfig load_run_config(const std::optional<fs::path>& path, const CliOverrides& overrides) {
  if (!path) return parse_run_config("", overrides, {});
  std::ifstream in(*path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path->string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), overrides, path->parent_path());
}

std::vector<fs::path> cmd_simulate(const RunConfig& c) {
  ensure_dir(c.output);
  // fail on an infeasible scenario before writing any replicate
  SimScenario probe = c.scenario;
  probe.seed = derive_seed(c.seed, 0);
  const SimDataset first = make_scenario(probe);

  auto write_rep = [&](std::size_t r) {
    SimScenario sc = c.scenario;
    sc.seed = derive_seed(c.seed, r);
    const SimDataset sim = r == 0 ? first : make_scenario(sc);
    const fs::path dir = c.output / rep_name(r);
    ensure_dir(dir);
    save_edge_list(sim.net, dir / "edges.txt");
    if (!(sim.net == sim.true_net)) save_edge_list(sim.true_net, dir / "true_edges.txt");
    write_matrix_csv(sim.train.x, dir / "x_train.csv");
    write_vector_csv(sim.train.y, dir / "y_train.csv");
    write_matrix_csv(sim.test.x, dir / "x_test.csv");
    write_vector_csv(sim.test.y, dir / "y_test.csv");
    Json truth;
    truth["family"] = family_name(c.family);
    truth["seed"] = sc.seed;
    truth["markers"] = one_based(sim.true_markers);
    truth["beta"] = std::vector<double>(sim.true_beta.data(),
                                        sim.true_beta.data() + sim.true_beta.size());
    truth["noise_variance"] = sim.noise_variance;
    truth["jitter"] = sim.jitter;
    write_json_file(truth, dir / "truth.json");
    return sc.seed;
  };
  const auto seeds = detail::run_parallel(c.replicates, c.workers, write_rep);

  Json manifest;
  manifest["config_hash"] = hex64(c.hash);
  manifest["versions"] = versions();
  manifest["master_seed"] = c.seed;
  manifest["config"] = Json::parse(c.canonical);
  Json reps = Json::array();
  std::vector<fs::path> dirs;
  for (std::size_t r = 0; r < c.replicates; ++r) {
    reps.push_back(Json{{"dir", rep_name(r)}, {"seed", seeds[r]}});
    dirs.push_back(c.output / rep_name(r));
  }
  manifest["replicates"] = reps;
  write_json_file(manifest, c.output / "manifest.json");
  return dirs;
}

std::vector<fs::path> cmd_fit(const RunConfig& c) {
  if (c.manifest) {
    std::vector<fs::path> out;
    for (const auto& dir : manifest_replicates(*c.manifest)) {
      out.push_back(fit_one(c, dir, dir / c.fit_subdir));
    }
    return out;
  }
  return {fit_one(c, c.data_dir, c.output)};
}

fs::path cmd_evaluate(const RunConfig& c) {
  const auto reps = replicate_list(c);
  if (reps.empty()) config_error("evaluate needs evaluate.replicates or a manifest");
  std::vector<EvalReport> reports;
  for (const auto& dir : reps) {
    const fs::path fit = dir / c.fit_subdir;
    require_file(fit / "summary.json", "fit summary");
    require_file(dir / "truth.json", "truth file");
    require_file(dir / "x_test.csv", "test covariates");
    require_file(dir / "y_test.csv", "test responses");
    const PosteriorSummary s = read_summary_json(fit / "summary.json");
    if (s.family != c.family) {
      config_error(dir.string() + ": fit family is " + std::string(family_name(s.family)) +
                   " but evaluation requested " + std::string(family_name(c.family)));
    }
    const Json truth = read_json_file(dir / "truth.json");
    std::vector<std::size_t> markers;
    try {
      if (parse_family(truth.at("family").get<std::string>()) != c.family) {
        config_error(dir.string() + ": truth family differs from the evaluation family");
      }
      for (std::size_t m : truth.at("markers").get<std::vector<std::size_t>>()) {
        if (m == 0) throw Error(ErrorCode::kParse, "truth markers are 1-based");
        markers.push_back(m - 1);
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, (dir / "truth.json").string() + ": " + e.what());
    }
    const Eigen::MatrixXd x = read_matrix_csv(dir / "x_test.csv");
    const Eigen::VectorXd y = read_vector_csv(dir / "y_test.csv");
    if (x.cols() != static_cast<Eigen::Index>(s.inclusion.size()) || x.rows() != y.size()) {
      throw Error(ErrorCode::kShape, dir.string() + ": test data do not match the fit");
    }
    const Eigen::VectorXd beta = point_estimate(s);
    EvalReport r;
    r.label = dir.filename().string();
    const TpFp tf = tp_fp(s.selected, markers);
    r.tp = static_cast<double>(tf.tp);
    r.fp = static_cast<double>(tf.fp);
    r.auc = auc(s.inclusion, markers);
    const Eigen::VectorXd h = x * beta;
    if (c.family == Family::kGaussian) {
      r.pmse = pmse(y, h);
    } else {
      const Eigen::VectorXd prob = h.unaryExpr([](double v) { return logistic(v); });
      r.ce = static_cast<double>(classification_error(y, prob));
    }
    reports.push_back(r);
  }
  const fs::path out = c.eval_output ? *c.eval_output : c.output / "evaluation.csv";
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_eval_csv(reports, out);
  if (reports.size() >= 2) {
    for (const auto& [name, m] : aggregate(reports)) {
      std::cout << name << ' ' << m.mean << " (" << m.se << ")\n";
    }
  } else {
    const auto& r = reports.front();
    std::cout << "tp " << r.tp << "\nfp " << r.fp << "\nauc " << r.auc << '\n';
    if (r.pmse) std::cout << "pmse " << *r.pmse << '\n';
    if (r.ce) std::cout << "ce " << *r.ce << '\n';
  }
  return out;
}

double cmd_diagnose(const RunConfig& c) {
  const fs::path dir = c.diagnose_dir ? *c.diagnose_dir : c.output;
  std::vector<McmcTrace> traces;
  for (std::size_t k = 1;; ++k) {
    const fs::path p = dir / ("chain_" + std::to_string(k) + ".bin");
    if (!fs::is_regular_file(p)) break;
    traces.push_back(read_trace_binary(p));
  }
  if (traces.size() < 2) {
    throw Error(ErrorCode::kIo, "diagnose needs at least two chain_<k>.bin traces in " +
                                    dir.string());
  }
  const auto sel = psrf_selectors(traces.front());
  const PsrfReport r = gelman_rubin(traces, sel, c.diagnose_split);
  write_psrf_csv(r, dir / "psrf.csv");
  std::cout << "chains " << traces.size() << "\nparameters " << r.names.size()
            << "\nundefined " << r.undefined << "\npsrf_2.5% " << r.lower
            << "\npsrf_97.5% " << r.upper << '\n';
  return r.upper;
}

}  // namespace tglg
