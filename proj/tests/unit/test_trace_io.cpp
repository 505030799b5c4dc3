#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tglg/error.hpp"
#include "tglg/trace_io.hpp"

using namespace tglg;
namespace fs = std::filesystem;

namespace {

McmcTrace small_trace() {
  const Dataset data = Dataset::empty(3, GlmFamily::gaussian());
  SamplerConfig c;
  c.n_iter = 60;
  c.burn_in = 20;
  c.thin = 2;
  c.seed = 12;
  return run_chain(data, Network(3, {{0, 1}, {1, 2}}), c);
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / "tglg_trace_io_test";
  TempDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("binary trace round trip") {
  TempDir dir;
  const McmcTrace t = small_trace();
  const fs::path file = dir.path / "chain_1.bin";
  write_trace_binary(t, file, R"({"seed":12})");
  CHECK(fs::exists(sidecar_path(file)));
  CHECK(sidecar_path(file).extension() == ".json");
  const McmcTrace r = read_trace_binary(file);
  CHECK(r.kind == t.kind);
  CHECK(r.p == 3);
  CHECK(r.size() == 20);
  CHECK(r.gamma == t.gamma);
  CHECK(r.alpha == t.alpha);
  CHECK(r.lambda == t.lambda);
  CHECK(r.epsilon == t.epsilon);
  CHECK(r.log_likelihood == t.log_likelihood);
  CHECK(r.seed == 12);
  CHECK(r.blocks.size() == t.blocks.size());
  CHECK(r.blocks.at("gamma").accepted == t.blocks.at("gamma").accepted);
}

TEST_CASE("corrupt traces are rejected") {
  TempDir dir;
  const McmcTrace t = small_trace();
  const fs::path file = dir.path / "chain_1.bin";
  write_trace_binary(t, file);
  std::string bytes;
  {
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    bytes = ss.str();
  }
  auto rewrite = [&](const std::string& b) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  auto code = [&] {
    try {
      read_trace_binary(file);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kUndefined;
  };

  std::string bad = bytes;
  bad[0] = 'X';
  rewrite(bad);
  CHECK(code() == ErrorCode::kParse);

  rewrite(bytes.substr(0, bytes.size() - 8));
  CHECK(code() == ErrorCode::kParse);

  rewrite(bytes + "junk");
  CHECK(code() == ErrorCode::kParse);

  rewrite(bytes);
  CHECK_NOTHROW(read_trace_binary(file));
  {
    std::ofstream side(sidecar_path(file));
    side << "{not json";
  }
  CHECK(code() == ErrorCode::kParse);
}

TEST_CASE("CSV trace header") {
  TempDir dir;
  const McmcTrace t = small_trace();
  const fs::path file = dir.path / "chain.csv";
  write_trace_csv(t, file);
  std::ifstream in(file);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("gamma_1,gamma_2,gamma_3,alpha_1", 0) == 0);
  CHECK(header.find("log_likelihood") != std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == t.size());
}
