#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "tglg/error.hpp"
#include "tglg/graph.hpp"
#include "tglg/log.hpp"

using namespace tglg;

namespace {

Network star(std::size_t leaves) {
  std::vector<Edge> e;
  for (std::size_t k = 1; k <= leaves; ++k) e.emplace_back(0, k);
  return Network(leaves + 1, e);
}

std::size_t induced_edges(const Network& net, const std::vector<std::size_t>& nodes) {
  std::size_t n = 0;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) n += net.adjacent(nodes[a], nodes[b]);
  }
  return n;
}

bool connected(const Network& net) {
  const auto d = shortest_paths(net);
  for (std::size_t k = 0; k < net.size(); ++k) {
    if (!d.reachable(0, k)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("network rejects self-loops, duplicates and out-of-range ids") {
  CHECK_THROWS_AS(Network(3, {{1, 1}}), Error);
  CHECK_THROWS_AS(Network(3, {{0, 1}, {1, 0}}), Error);
  CHECK_THROWS_AS(Network(3, {{0, 3}}), Error);
  const Network n(3, {{2, 1}, {0, 1}});
  CHECK(n.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
  CHECK(n.degree(1) == 2);
}

TEST_CASE("laplacian of a single edge") {
  const Eigen::MatrixXd l(build_laplacian(Network(2, {{0, 1}})));
  CHECK(l(0, 0) == 1.0);
  CHECK(l(1, 1) == 1.0);
  CHECK(l(0, 1) == -1.0);
  CHECK(l(1, 0) == -1.0);
}

TEST_CASE("isolated node has an all-zero laplacian row and keeps the stored pattern") {
  const Network n(3, {{0, 1}});
  const SparseMatrix l = build_laplacian(n);
  CHECK(l.nonZeros() == 3 + 2);
  const Eigen::MatrixXd d(l);
  CHECK(d.row(2).cwiseAbs().sum() == 0.0);
  CHECK(n.isolated_nodes() == std::vector<std::size_t>{2});
}

TEST_CASE("laplacian is symmetric positive semidefinite with the expected stored count") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t p = 5 + rep;
    const auto e = oracle::random_edges(p, 0.2, gen);
    const Network n(p, std::vector<Edge>(e.begin(), e.end()));
    const SparseMatrix l = build_laplacian(n);
    CHECK(l.nonZeros() == static_cast<Eigen::Index>(p + 2 * e.size()));
    const Eigen::MatrixXd d(l);
    CHECK((d - d.transpose()).norm() == 0.0);
    std::normal_distribution<double> z;
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x(p);
      for (auto& v : x) v = z(gen);
      CHECK(x.dot(d * x) >= -1e-12);
    }
  }
}

TEST_CASE("barabasi game: small cases, tree property and determinism") {
  const Network two = barabasi_game(2, 1, 9);
  CHECK(two.edges() == std::vector<Edge>{{0, 1}});
  const Network a = barabasi_game(1000, 1, 4);
  CHECK(a.edge_count() == 999);
  CHECK(connected(a));
  CHECK(a == barabasi_game(1000, 1, 4));
  CHECK_THROWS_AS(barabasi_game(1, 1, 1), Error);
  CHECK_THROWS_AS(barabasi_game(10, 0, 1), Error);
  for (std::uint64_t s = 1; s <= 20; ++s) CHECK(connected(barabasi_game(200, 1, s)));
}

TEST_CASE("shortest paths: trivial cases") {
  const auto path = shortest_paths(Network(3, {{0, 1}, {1, 2}}));
  CHECK(path(0, 2) == 2);
  for (std::size_t j = 0; j < 3; ++j) CHECK(path(j, j) == 0);
  const auto iso = shortest_paths(Network(2, {}));
  CHECK_FALSE(iso.reachable(0, 1));
}

TEST_CASE("shortest paths agree with Floyd-Warshall on random graphs") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t p = 2 + rep;
    const auto e = oracle::random_edges(p, 0.08, gen);
    const auto d = shortest_paths(Network(p, std::vector<Edge>(e.begin(), e.end())));
    const auto fw = oracle::floyd_warshall(p, e);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < p; ++k) {
        if (fw[j][k] == oracle::kInf) {
          CHECK_FALSE(d.reachable(j, k));
        } else {
          CHECK(d(j, k) == fw[j][k]);
        }
      }
    }
  }
}

TEST_CASE("pick markers: connectivity, independence and infeasibility") {
  const Network path(3, {{0, 1}, {1, 2}});
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto m = pick_markers(path, 2, MarkerMode::kConnected, s);
    std::sort(m.begin(), m.end());
    CHECK(m != std::vector<std::size_t>{0, 2});
  }
  const Network tri(3, {{0, 1}, {0, 2}, {1, 2}});
  CHECK_THROWS_AS(pick_markers(tri, 2, MarkerMode::kDisconnected, 1), Error);
  const Network ba = barabasi_game(300, 1, 2);
  const auto ind = pick_markers(ba, 10, MarkerMode::kDisconnected, 5);
  CHECK(ind.size() == 10);
  CHECK(induced_edges(ba, ind) == 0);
}

TEST_CASE("permute labels keeps degree multiset") {
  const Network ba = barabasi_game(100, 1, 8);
  CHECK(permute_labels(ba, 0.0, 1) == ba);
  auto sorted_degrees = [](const Network& n) {
    std::vector<std::size_t> d(n.degrees().begin(), n.degrees().end());
    std::sort(d.begin(), d.end());
    return d;
  };
  CHECK(sorted_degrees(permute_labels(ba, 1.0, 2)) == sorted_degrees(ba));
  const auto [moved, map] = permute_labels_with_map(ba, 0.2, 3);
  std::size_t changed = 0;
  for (std::size_t j = 0; j < map.size(); ++j) changed += map[j] != j;
  CHECK(changed == 20);
  CHECK(relabel(ba, map) == moved);
  const Network path(3, {{0, 1}, {1, 2}});
  const std::vector<std::size_t> swap{2, 1, 0};
  CHECK(relabel(path, swap) == path);
}

TEST_CASE("edge list parsing and round trip") {
  const Network n = parse_edge_list("1 2\n2 3");
  CHECK(n.size() == 3);
  CHECK(n.edge_count() == 2);
  CHECK_THROWS_AS(parse_edge_list("5 5"), Error);
  CHECK_THROWS_AS(parse_edge_list("1 2\n1 x"), Error);
  CHECK_THROWS_AS(parse_edge_list("1 4", 3), Error);
  try {
    parse_edge_list("1 2\n\n3 3\n");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  const Network ba = barabasi_game(1000, 1, 6);
  const auto path = std::filesystem::temp_directory_path() / "tglg_edges_roundtrip.txt";
  save_edge_list(ba, path);
  CHECK(load_edge_list(path) == ba);
  std::filesystem::remove(path);
}

TEST_SUITE("derived") {
  TEST_CASE("star laplacian matches the definition") {
    const SparseMatrix l = build_laplacian(star(3));
    const Eigen::MatrixXd want = oracle::laplacian(4, {{0, 1}, {0, 2}, {0, 3}});
    CHECK((Eigen::MatrixXd(l) - want).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(Eigen::MatrixXd(l)(0, 1) == doctest::Approx(-0.57735).epsilon(1e-5));
    CHECK(Eigen::MatrixXd(l)(1, 2) == 0.0);
    CHECK(Eigen::MatrixXd(l)(0, 0) == 1.0);
  }

  TEST_CASE("scale-free max degree exceeds 10 on every one of 100 seeds") {
    std::size_t lowest = std::numeric_limits<std::size_t>::max();
    for (std::uint64_t s = 1; s <= 100; ++s) {
      const Network n = barabasi_game(1000, 1, s);
      const auto d = n.degrees();
      lowest = std::min(lowest, *std::max_element(d.begin(), d.end()));
    }
    CHECK(lowest > 10);
    // observed before the build was frozen: seeds 1..100 give a minimum of 35
    CHECK(lowest == 35);
  }

  TEST_CASE("connected markers on a scale-free tree induce exactly k-1 edges") {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const Network ba = barabasi_game(1000, 1, s);
      const auto m = pick_markers(ba, 10, MarkerMode::kConnected, s + 100);
      CHECK(std::set<std::size_t>(m.begin(), m.end()).size() == 10);
      CHECK(induced_edges(ba, m) == 9);
    }
  }
}

TEST_CASE("laplacian eigenvalues lie in [0, 2] on small random graphs") {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t p = 2 + rep % 49;
    const auto e = oracle::random_edges(p, 0.15, gen);
    const Eigen::MatrixXd l(build_laplacian(Network(p, std::vector<Edge>(e.begin(), e.end()))));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= 2.0 + 1e-9);
  }
}
