#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

#include "tglg/error.hpp"
#include "tglg/graph.hpp"
#include "tglg/inference.hpp"
#include "tglg/metrics.hpp"
#include "tglg/sampler.hpp"
#include "tglg/simulate.hpp"

namespace py = pybind11;
using namespace tglg;

namespace {

std::vector<Edge> to_edges(const std::vector<std::pair<std::size_t, std::size_t>>& e) {
  return {e.begin(), e.end()};
}

py::dict dataset_dict(const Dataset& d) {
  py::dict out;
  out["x"] = d.x;
  out["y"] = d.y;
  return out;
}

py::dict fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
             const std::vector<std::pair<std::size_t, std::size_t>>& edges,
             const std::string& family, std::size_t n_iter, std::size_t burn_in, std::size_t thin,
             std::size_t chains, std::uint64_t seed, std::size_t workers,
             std::optional<double> lambda) {
  Dataset data;
  data.x = x;
  data.y = y;
  data.z.resize(x.rows(), 0);
  data.family = parse_family(family) == Family::kGaussian ? GlmFamily::gaussian() : GlmFamily::logit();
  data.validate();
  const Network net(static_cast<std::size_t>(x.cols()), to_edges(edges));
  SamplerConfig c;
  c.n_iter = n_iter;
  c.burn_in = burn_in;
  c.thin = thin;
  c.seed = seed;
  c.fixed_lambda = lambda;

  std::vector<McmcTrace> traces;
  {
    py::gil_scoped_release release;
    traces = run_chains(data, net, c, chains, workers);
  }
  const PosteriorSummary s = summarize(traces);

  py::dict out;
  out["inclusion"] = s.inclusion;
  std::vector<double> effect;
  for (const auto& e : s.effect) effect.push_back(e.value_or(std::numeric_limits<double>::quiet_NaN()));
  out["effect"] = effect;
  out["selected"] = s.selected;
  out["beta"] = point_estimate(s);
  if (traces.size() > 1) {
    const auto sel = beta_selectors(traces.front().p);
    out["psrf_upper"] = gelman_rubin(traces, sel).upper;
  }
  py::dict rates;
  for (const auto& [name, b] : traces.front().blocks) rates[py::str(name)] = b.acceptance_rate();
  out["acceptance"] = rates;
  std::vector<double> lam, ll;
  for (const auto& t : traces) {
    lam.insert(lam.end(), t.lambda.begin(), t.lambda.end());
    ll.insert(ll.end(), t.log_likelihood.begin(), t.log_likelihood.end());
  }
  out["lambda"] = lam;
  out["log_likelihood"] = ll;
  return out;
}

py::dict simulate(const std::string& kind, std::uint64_t seed, std::size_t n_train,
                  std::size_t n_test, const std::string& family, const std::string& marker_type,
                  std::size_t p, std::size_t n_markers) {
  SimScenario sc;
  const bool scale_free = kind == "scale_free" || kind == "scalefree";
  sc.kind = scale_free ? SimScenario::Kind::kScaleFree : SimScenario::Kind::kSimple;
  if (kind != "simple" && !scale_free) {
    throw Error(ErrorCode::kConfig, "unknown scenario kind '" + kind + "'");
  }
  sc.seed = seed;
  sc.n_train = n_train;
  sc.n_test = n_test;
  sc.family = parse_family(family);
  sc.marker_type = parse_marker_type(marker_type);
  sc.p = p;
  sc.n_markers = n_markers;
  sc.validate();
  const SimDataset sim = make_scenario(sc);
  py::dict out;
  out["train"] = dataset_dict(sim.train);
  out["test"] = dataset_dict(sim.test);
  out["p"] = sim.net.size();
  out["edges"] = sim.net.edges();
  out["true_beta"] = sim.true_beta;
  out["true_markers"] = sim.true_markers;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph-guided Bayesian marker selection.";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("simulate", &simulate, py::arg("kind") = "simple", py::arg("seed") = 1,
        py::arg("n_train") = 100, py::arg("n_test") = 100, py::arg("family") = "gaussian",
        py::arg("marker_type") = "type2", py::arg("p") = 1000, py::arg("n_markers") = 10,
        "Simulated replicate: train/test data, edges (0-based) and the true effects.");

  m.def("fit", &fit, py::arg("x"), py::arg("y"), py::arg("edges"), py::kw_only(),
        py::arg("family") = "gaussian", py::arg("n_iter") = 30000, py::arg("burn_in") = 20000,
        py::arg("thin") = 1, py::arg("chains") = 1, py::arg("seed") = 1, py::arg("workers") = 1,
        py::arg("fixed_lambda") = py::none(),
        "Runs the sampler and returns the posterior summary.");

  m.def("laplacian", [](std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& e) {
    return Eigen::MatrixXd(build_laplacian(Network(p, to_edges(e))));
  }, py::arg("p"), py::arg("edges"), "Normalized graph Laplacian as a dense matrix.");

  m.def("auc", [](const std::vector<double>& scores, const std::vector<std::size_t>& truth) {
    return auc(scores, truth);
  }, py::arg("scores"), py::arg("truth"));

  m.def("psrf", [](const std::vector<std::vector<double>>& chains, bool split) {
    return psrf(chains, split);
  }, py::arg("chains"), py::arg("split") = false);

  m.attr("__version__") = TGLG_VERSION;
}
