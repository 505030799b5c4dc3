#include "tglg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tglg/error.hpp"
#include "tglg/rng.hpp"

namespace tglg {

Network::Network(std::size_t p, std::vector<Edge> edges) : degrees_(p, 0) {
  for (auto& [u, v] : edges) {
    if (u >= p || v >= p) {
      throw Error(ErrorCode::kParameter,
                  "edge (" + std::to_string(u + 1) + ", " + std::to_string(v + 1) +
                      ") outside node range 1.." + std::to_string(p));
    }
    if (u == v) {
      throw Error(ErrorCode::kParameter,
                  "self-loop at node " + std::to_string(u + 1));
    }
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw Error(ErrorCode::kParameter,
                "duplicate edge (" + std::to_string(dup->first + 1) + ", " +
                    std::to_string(dup->second + 1) + ")");
  }
  edges_ = std::move(edges);

  for (const auto& [u, v] : edges_) {
    ++degrees_[u];
    ++degrees_[v];
  }
  offsets_.assign(p + 1, 0);
  for (std::size_t j = 0; j < p; ++j) offsets_[j + 1] = offsets_[j] + degrees_[j];
  adjacency_.resize(offsets_[p]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [u, v] : edges_) {
    adjacency_[fill[u]++] = v;
    adjacency_[fill[v]++] = u;
  }
  for (std::size_t j = 0; j < p; ++j) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[j]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[j + 1]));
  }
}

std::span<const std::size_t> Network::neighbors(std::size_t j) const {
  return std::span<const std::size_t>(adjacency_).subspan(offsets_.at(j), degrees_[j]);
}

bool Network::adjacent(std::size_t j, std::size_t k) const {
  auto nb = neighbors(j);
  return std::binary_search(nb.begin(), nb.end(), k);
}

std::vector<std::size_t> Network::isolated_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if (degrees_[j] == 0) out.push_back(j);
  }
  return out;
}

void DistanceMatrix::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (std::size_t j = 0; j < p_; ++j) {
    for (std::size_t k = 0; k < p_; ++k) {
      if (k) out << ',';
      if (reachable(j, k)) {
        out << (*this)(j, k);
      } else {
        out << "inf";
      }
    }
    out << '\n';
  }
}

SparseMatrix build_laplacian(const Network& net) {
  const std::size_t p = net.size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(p + 2 * net.edge_count());
  for (std::size_t j = 0; j < p; ++j) {
    triplets.emplace_back(j, j, net.degree(j) == 0 ? 0.0 : 1.0);
  }
  for (const auto& [u, v] : net.edges()) {
    const double w = -1.0 / std::sqrt(static_cast<double>(net.degree(u)) *
                                      static_cast<double>(net.degree(v)));
    triplets.emplace_back(u, v, w);
    triplets.emplace_back(v, u, w);
  }
  const auto n = static_cast<Eigen::Index>(p);
  SparseMatrix lap(n, n);
  lap.setFromTriplets(triplets.begin(), triplets.end());
  lap.makeCompressed();
  return lap;
}

Network barabasi_game(std::size_t p, std::size_t m, std::uint64_t seed) {
  if (p < 2) throw Error(ErrorCode::kParameter, "barabasi_game requires p >= 2");
  if (m < 1) throw Error(ErrorCode::kParameter, "barabasi_game requires m >= 1");

  Rng rng(seed);
  // Each entry is one unit of attachment weight: a node appears once per
  // incident edge endpoint, plus once for the seed node.
  std::vector<std::size_t> urn{0};
  urn.reserve(2 * p * m + 1);
  std::vector<Edge> edges;
  edges.reserve(p * m);
  std::vector<std::size_t> chosen;
  for (std::size_t t = 1; t < p; ++t) {
    const std::size_t k = std::min(m, t);
    chosen.clear();
    while (chosen.size() < k) {
      const std::size_t target = urn[rng.index(urn.size())];
      if (std::find(chosen.begin(), chosen.end(), target) == chosen.end()) {
        chosen.push_back(target);
      }
    }
    for (std::size_t target : chosen) {
      edges.emplace_back(target, t);
      urn.push_back(target);
      urn.push_back(t);
    }
  }
  return Network(p, std::move(edges));
}

DistanceMatrix shortest_paths(const Network& net) {
  const std::size_t p = net.size();
  DistanceMatrix dist(p);
  std::vector<std::size_t> queue(p);
  for (std::size_t s = 0; s < p; ++s) {
    std::size_t head = 0;
    std::size_t tail = 0;
    dist(s, s) = 0;
    queue[tail++] = s;
    while (head < tail) {
      const std::size_t u = queue[head++];
      for (std::size_t v : net.neighbors(u)) {
        if (dist(s, v) == DistanceMatrix::kUnreachable) {
          dist(s, v) = dist(s, u) + 1;
          queue[tail++] = v;
        }
      }
    }
  }
  return dist;
}

namespace {

constexpr int kConnectedRestarts = 1000;
constexpr int kDisconnectedDraws = 100000;

std::optional<std::vector<std::size_t>> grow_connected(const Network& net,
                                                       std::size_t k, Rng& rng) {
  const std::size_t p = net.size();
  std::vector<char> in_set(p, 0);
  std::vector<char> in_frontier(p, 0);
  std::vector<std::size_t> members;
  std::vector<std::size_t> frontier;
  const std::size_t start = rng.index(p);
  auto add = [&](std::size_t j) {
    in_set[j] = 1;
    members.push_back(j);
    for (std::size_t nb : net.neighbors(j)) {
      if (!in_set[nb] && !in_frontier[nb]) {
        in_frontier[nb] = 1;
        frontier.push_back(nb);
      }
    }
  };
  add(start);
  while (members.size() < k) {
    if (frontier.empty()) return std::nullopt;
    const std::size_t pick = rng.index(frontier.size());
    const std::size_t j = frontier[pick];
    frontier[pick] = frontier.back();
    frontier.pop_back();
    in_frontier[j] = 0;
    add(j);
  }
  std::sort(members.begin(), members.end());
  return members;
}

}  // namespace

std::vector<std::size_t> pick_markers(const Network& net, std::size_t k,
                                      MarkerMode mode, std::uint64_t seed) {
  const std::size_t p = net.size();
  if (k > p) {
    throw Error(ErrorCode::kFeasibility, "cannot pick " + std::to_string(k) +
                                             " markers from " + std::to_string(p) +
                                             " nodes");
  }
  if (k == 0) return {};
  Rng rng(seed);

  if (mode == MarkerMode::kConnected) {
    for (int attempt = 0; attempt < kConnectedRestarts; ++attempt) {
      if (auto found = grow_connected(net, k, rng)) return *found;
    }
    throw Error(ErrorCode::kFeasibility,
                "no connected subgraph of " + std::to_string(k) +
                    " nodes found after " + std::to_string(kConnectedRestarts) +
                    " restarts");
  }

  std::vector<std::size_t> nodes(p);
  std::iota(nodes.begin(), nodes.end(), std::size_t{0});
  for (int attempt = 0; attempt < kDisconnectedDraws; ++attempt) {
    // partial Fisher-Yates for a uniform k-subset
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(nodes[i], nodes[i + rng.index(p - i)]);
    }
    bool independent = true;
    for (std::size_t i = 0; i < k && independent; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (net.adjacent(nodes[i], nodes[j])) {
          independent = false;
          break;
        }
      }
    }
    if (independent) {
      std::vector<std::size_t> out(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  throw Error(ErrorCode::kFeasibility,
              "no set of " + std::to_string(k) + " pairwise non-adjacent nodes found after " +
                  std::to_string(kDisconnectedDraws) + " draws");
}

Network relabel(const Network& net, std::span<const std::size_t> mapping) {
  if (mapping.size() != net.size()) {
    throw Error(ErrorCode::kShape, "relabel mapping has wrong length");
  }
  std::vector<Edge> edges;
  edges.reserve(net.edge_count());
  for (const auto& [u, v] : net.edges()) edges.emplace_back(mapping[u], mapping[v]);
  return Network(net.size(), std::move(edges));
}

std::pair<Network, std::vector<std::size_t>> permute_labels_with_map(
    const Network& net, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kParameter, "permute fraction must lie in [0, 1]");
  }
  const std::size_t p = net.size();
  std::vector<std::size_t> mapping(p);
  std::iota(mapping.begin(), mapping.end(), std::size_t{0});
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(p) - 1e-12));
  if (count >= 2) {
    Rng rng(seed);
    std::vector<std::size_t> nodes(mapping);
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(nodes[i], nodes[i + rng.index(p - i)]);
    }
    for (std::size_t i = 0; i < count; ++i) {
      mapping[nodes[i]] = nodes[(i + 1) % count];
    }
  }
  return {relabel(net, mapping), mapping};
}

Network permute_labels(const Network& net, double fraction, std::uint64_t seed) {
  return permute_labels_with_map(net, fraction, seed).first;
}

Network parse_edge_list(const std::string& text, std::optional<std::size_t> p) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<long long, long long>> raw;
  std::optional<std::size_t> header_p;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::kParse, "edge list line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream header(line.substr(first + 1));
      std::string key;
      std::size_t value = 0;
      if (header >> key && key == "p" && header >> value) header_p = value;
      continue;
    }
    std::istringstream fields(line);
    long long u = 0;
    long long v = 0;
    if (!(fields >> u >> v)) fail("expected two integer node ids");
    std::string rest;
    if (fields >> rest) fail("unexpected trailing field '" + rest + "'");
    if (u < 1 || v < 1) fail("node ids are 1-based");
    if (u == v) fail("self-loop at node " + std::to_string(u));
    const auto bound = p ? p : header_p;
    if (bound && (static_cast<std::size_t>(u) > *bound || static_cast<std::size_t>(v) > *bound)) {
      fail("node id exceeds p = " + std::to_string(*bound));
    }
    raw.emplace_back(u, v);
  }
  std::size_t n = p.value_or(header_p.value_or(0));
  if (!p && !header_p) {
    for (const auto& [u, v] : raw) {
      n = std::max({n, static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    }
  }
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& [u, v] : raw) {
    edges.emplace_back(static_cast<std::size_t>(u - 1), static_cast<std::size_t>(v - 1));
  }
  return Network(n, std::move(edges));
}

Network load_edge_list(const std::filesystem::path& path, std::optional<std::size_t> p) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open edge list " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_edge_list(buffer.str(), p);
}

void save_edge_list(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "# p " << net.size() << '\n';
  for (const auto& [u, v] : net.edges()) out << u + 1 << '\t' << v + 1 << '\n';
}

}  // namespace tglg
