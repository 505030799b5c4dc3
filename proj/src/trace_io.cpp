#include "tglg/trace_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tglg/error.hpp"

namespace tglg {

namespace {

constexpr std::array<char, 8> kMagic = {'T', 'G', 'L', 'G', 'T', 'R', 'C', '1'};
constexpr std::uint32_t kEndianMarker = 0x01020304u;

using Json = nlohmann::json;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::kParse, path.string() + ": truncated trace header");
  }
  return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_doubles(std::istream& in, std::vector<double>& v, std::size_t n,
                 const std::filesystem::path& path) {
  v.resize(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw Error(ErrorCode::kParse, path.string() + ": truncated trace payload");
  }
}

Json block_json(const BlockStats& b) {
  return Json{{"burnin_proposed", b.burnin_proposed},
              {"burnin_accepted", b.burnin_accepted},
              {"proposed", b.proposed},
              {"accepted", b.accepted},
              {"acceptance_rate", b.acceptance_rate()},
              {"nonfinite", b.nonfinite},
              {"step_at_burnin_end", b.step_at_burnin_end},
              {"final_step", b.final_step}};
}

BlockStats block_from_json(const Json& j) {
  BlockStats b;
  b.burnin_proposed = j.at("burnin_proposed").get<std::size_t>();
  b.burnin_accepted = j.at("burnin_accepted").get<std::size_t>();
  b.proposed = j.at("proposed").get<std::size_t>();
  b.accepted = j.at("accepted").get<std::size_t>();
  b.nonfinite = j.at("nonfinite").get<std::size_t>();
  b.step_at_burnin_end = j.at("step_at_burnin_end").get<double>();
  b.final_step = j.at("final_step").get<double>();
  return b;
}

Json metadata(const McmcTrace& t) {
  Json j;
  j["format"] = "TGLGTRC1";
  j["kind"] = t.kind;
  j["p"] = t.p;
  j["q"] = t.q;
  j["samples"] = t.size();
  j["family"] = family_name(t.family);
  j["epsilon_mode"] = epsilon_mode_name(t.epsilon_mode);
  j["seed"] = t.seed;
  j["n_iter"] = t.n_iter;
  j["burn_in"] = t.burn_in;
  j["thin"] = t.thin;
  j["wall_seconds"] = t.wall_seconds;
  Json blocks = Json::object();
  for (const auto& [name, b] : t.blocks) blocks[name] = block_json(b);
  j["blocks"] = blocks;
  return j;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  return p.replace_extension(".json");
}

void write_trace_csv(const McmcTrace& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  for (std::size_t j = 0; j < t.p; ++j) out << "gamma_" << j + 1 << ',';
  for (std::size_t j = 0; j < t.p; ++j) out << "alpha_" << j + 1 << ',';
  for (std::size_t k = 0; k < t.q; ++k) out << "omega_" << k + 1 << ',';
  out << "lambda,sigma2_gamma,sigma2_alpha,epsilon,sigma2_noise,log_likelihood\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.p; ++j) out << t.gamma_at(i, j) << ',';
    for (std::size_t j = 0; j < t.p; ++j) out << t.alpha_at(i, j) << ',';
    for (std::size_t k = 0; k < t.q; ++k) out << t.omega_at(i, k) << ',';
    out << t.lambda[i] << ',' << t.sigma2_gamma[i] << ',' << t.sigma2_alpha[i] << ','
        << t.epsilon[i] << ',' << t.sigma2_noise[i] << ',' << t.log_likelihood[i] << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string trace_metadata_json(const McmcTrace& trace, const std::string& config_json) {
  Json j = metadata(trace);
  if (!config_json.empty()) {
    try {
      j["config"] = Json::parse(config_json);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
    }
  }
  return j.dump(2);
}

void write_trace_binary(const McmcTrace& t, const std::filesystem::path& path,
                        const std::string& config_json) {
  const std::string meta = trace_metadata_json(t, config_json);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put(out, kEndianMarker);
    put(out, static_cast<std::uint64_t>(t.size()));
    put(out, static_cast<std::uint64_t>(t.p));
    put(out, static_cast<std::uint64_t>(t.q));
    for (const auto* v : {&t.gamma, &t.alpha, &t.omega, &t.lambda, &t.sigma2_gamma,
                          &t.sigma2_alpha, &t.epsilon, &t.sigma2_noise, &t.log_likelihood}) {
      put_doubles(out, *v);
    }
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
  }
  std::ofstream side(sidecar_path(path));
  if (!side) throw Error(ErrorCode::kIo, "cannot write " + sidecar_path(path).string());
  side << meta << '\n';
}

McmcTrace read_trace_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::kParse, path.string() + ": not a TGLGTRC1 trace");
  }
  if (get<std::uint32_t>(in, path) != kEndianMarker) {
    throw Error(ErrorCode::kParse, path.string() + ": trace written with a different byte order");
  }
  McmcTrace t;
  const auto n = static_cast<std::size_t>(get<std::uint64_t>(in, path));
  t.p = static_cast<std::size_t>(get<std::uint64_t>(in, path));
  t.q = static_cast<std::size_t>(get<std::uint64_t>(in, path));
  get_doubles(in, t.gamma, n * t.p, path);
  get_doubles(in, t.alpha, n * t.p, path);
  get_doubles(in, t.omega, n * t.q, path);
  for (auto* v : {&t.lambda, &t.sigma2_gamma, &t.sigma2_alpha, &t.epsilon, &t.sigma2_noise,
                  &t.log_likelihood}) {
    get_doubles(in, *v, n, path);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kParse, path.string() + ": trailing bytes after trace payload");
  }

  const auto side = sidecar_path(path);
  std::ifstream sin(side);
  if (!sin) throw Error(ErrorCode::kIo, "missing trace sidecar " + side.string());
  try {
    const Json j = Json::parse(sin);
    if (j.at("p").get<std::size_t>() != t.p || j.at("q").get<std::size_t>() != t.q ||
        j.at("samples").get<std::size_t>() != n) {
      throw Error(ErrorCode::kParse, side.string() + ": sidecar dimensions disagree with " +
                                         path.string());
    }
    t.kind = j.at("kind").get<std::string>();
    t.family = parse_family(j.at("family").get<std::string>());
    t.epsilon_mode = parse_epsilon_mode(j.at("epsilon_mode").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
    t.n_iter = j.at("n_iter").get<std::size_t>();
    t.burn_in = j.at("burn_in").get<std::size_t>();
    t.thin = j.at("thin").get<std::size_t>();
    t.wall_seconds = j.at("wall_seconds").get<double>();
    for (const auto& [name, b] : j.at("blocks").items()) t.blocks[name] = block_from_json(b);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, side.string() + ": " + e.what());
  }
  return t;
}

}  // namespace tglg
