#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

namespace tglg {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Undirected edge between 0-based node indices, stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected simple graph over p nodes. Immutable after construction.
///
/// Node ids are 0-based in this API; the edge-list file format and the CLI use
/// 1-based ids.
class Network {
 public:
  Network() = default;
  /// Validates and canonicalizes `edges` (sorted, first < second). Throws
  /// Error(kParameter) on out-of-range endpoints, self-loops or duplicates.
  Network(std::size_t p, std::vector<Edge> edges);

  std::size_t size() const noexcept { return degrees_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const std::size_t> degrees() const noexcept { return degrees_; }
  std::size_t degree(std::size_t j) const { return degrees_.at(j); }
  std::span<const std::size_t> neighbors(std::size_t j) const;
  bool adjacent(std::size_t j, std::size_t k) const;

  /// Nodes with no incident edge.
  std::vector<std::size_t> isolated_nodes() const;

  friend bool operator==(const Network& a, const Network& b) {
    return a.size() == b.size() && a.edges_ == b.edges_;
  }

 private:
  std::vector<Edge> edges_;
  std::vector<std::size_t> degrees_;
  // CSR adjacency
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> adjacency_;
};

/// Hop-count shortest-path matrix. Unreachable pairs hold kUnreachable.
class DistanceMatrix {
 public:
  static constexpr std::int32_t kUnreachable = -1;

  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t p)
      : p_(p), data_(p * p, kUnreachable) {}

  std::size_t size() const noexcept { return p_; }
  std::int32_t operator()(std::size_t j, std::size_t k) const {
    return data_[j * p_ + k];
  }
  std::int32_t& operator()(std::size_t j, std::size_t k) {
    return data_[j * p_ + k];
  }
  bool reachable(std::size_t j, std::size_t k) const {
    return (*this)(j, k) != kUnreachable;
  }

  /// Comma-separated rows, "inf" for unreachable pairs.
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::size_t p_ = 0;
  std::vector<std::int32_t> data_;
};

enum class MarkerMode { kConnected, kDisconnected };

/// Normalized graph Laplacian: 1 on the diagonal of non-isolated nodes,
/// -1/sqrt(d_j d_k) for adjacent pairs. Isolated nodes keep a stored zero on
/// the diagonal so the pattern always holds p + 2|E| entries.
SparseMatrix build_laplacian(const Network& net);

/// Preferential-attachment graph grown from a single seed node. Each new node
/// attaches m distinct edges (fewer while fewer than m nodes exist) with
/// probability proportional to current degree; the seed node carries an
/// extra unit weight so that it can be chosen while its degree is zero.
Network barabasi_game(std::size_t p, std::size_t m, std::uint64_t seed);

/// All-pairs BFS hop distances.
DistanceMatrix shortest_paths(const Network& net);

/// Picks k nodes that either induce a connected subgraph or are pairwise
/// non-adjacent. Throws Error(kFeasibility) if no such set is found within
/// the attempt budget.
std::vector<std::size_t> pick_markers(const Network& net, std::size_t k,
                                      MarkerMode mode, std::uint64_t seed);

/// Relabels ceil(fraction * p) randomly chosen nodes by a cyclic shift over a
/// random ordering of that subset. Returns the relabelled network and the
/// node mapping old -> new.
std::pair<Network, std::vector<std::size_t>> permute_labels_with_map(
    const Network& net, double fraction, std::uint64_t seed);

Network permute_labels(const Network& net, double fraction, std::uint64_t seed);

/// Applies an explicit node relabelling old -> mapping[old].
Network relabel(const Network& net, std::span<const std::size_t> mapping);

/// Reads whitespace-delimited "u v" pairs with 1-based ids. Lines starting
/// with '#' and blank lines are skipped. p defaults to the largest id seen.
Network load_edge_list(const std::filesystem::path& path,
                       std::optional<std::size_t> p = std::nullopt);
Network parse_edge_list(const std::string& text,
                        std::optional<std::size_t> p = std::nullopt);

/// Writes a "# p <p>" header and one canonical 1-based pair per line.
void save_edge_list(const Network& net, const std::filesystem::path& path);

}  // namespace tglg
