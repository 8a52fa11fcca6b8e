#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/matrix.hpp"

namespace slicegcn {

struct Edge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

enum class EdgeMode {
  kSymmetrize,    // (u, v) contributes to both neighbor lists
  kInNeighbors,   // (u, v) is u -> v; row v lists its in-neighbors
};

/// Compressed sparse rows. Row v holds the sorted neighbor list N(v).
class CsrAdjacency {
 public:
  CsrAdjacency() : row_offsets_(1, 0) {}

  /// Builds from an edge list, deduplicating. Self-loop edges in the input
  /// are dropped unless `self_loops` is set, in which case every node gets
  /// exactly one.
  static CsrAdjacency from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                                 EdgeMode mode = EdgeMode::kSymmetrize,
                                 bool self_loops = false) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;  // (row, col)
    entries.reserve(mode == EdgeMode::kSymmetrize ? 2 * edges.size() : edges.size());
    for (const Edge& e : edges) {
      if (e.u >= num_nodes || e.v >= num_nodes)
        throw DataError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                        ") references a node >= " + std::to_string(num_nodes));
      if (e.u == e.v) continue;
      entries.emplace_back(e.v, e.u);
      if (mode == EdgeMode::kSymmetrize) entries.emplace_back(e.u, e.v);
    }
    if (self_loops)
      for (std::size_t v = 0; v < num_nodes; ++v)
        entries.emplace_back(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v));
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

    CsrAdjacency adj;
    adj.num_nodes_ = num_nodes;
    adj.symmetric_ = mode == EdgeMode::kSymmetrize;
    adj.row_offsets_.assign(num_nodes + 1, 0);
    adj.col_indices_.reserve(entries.size());
    for (const auto& [r, c] : entries) {
      ++adj.row_offsets_[r + 1];
      adj.col_indices_.push_back(c);
    }
    for (std::size_t v = 0; v < num_nodes; ++v) adj.row_offsets_[v + 1] += adj.row_offsets_[v];
    return adj;
  }

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_entries() const { return col_indices_.size(); }
  bool symmetric() const { return symmetric_; }

  /// Undirected edge count for symmetric graphs, arc count otherwise.
  std::size_t num_edges() const {
    if (!symmetric_) return num_entries();
    std::size_t loops = 0;
    for (std::size_t v = 0; v < num_nodes_; ++v)
      loops += std::binary_search(neighbors(v).begin(), neighbors(v).end(),
                                  static_cast<std::uint32_t>(v));
    return (num_entries() - loops) / 2 + loops;
  }

  std::span<const std::uint32_t> neighbors(std::size_t v) const {
    return {col_indices_.data() + row_offsets_[v], row_offsets_[v + 1] - row_offsets_[v]};
  }
  std::size_t degree(std::size_t v) const { return row_offsets_[v + 1] - row_offsets_[v]; }

  std::span<const std::uint64_t> row_offsets() const { return row_offsets_; }
  std::span<const std::uint32_t> col_indices() const { return col_indices_; }

  /// Stored entries as edges in the orientation from_edges expects:
  /// entry (row v, col u) becomes (u, v).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(num_entries());
    for (std::size_t v = 0; v < num_nodes_; ++v)
      for (std::uint32_t u : neighbors(v)) out.push_back({u, static_cast<std::uint32_t>(v)});
    return out;
  }

  bool operator==(const CsrAdjacency&) const = default;

 private:
  std::size_t num_nodes_ = 0;
  bool symmetric_ = true;
  std::vector<std::uint64_t> row_offsets_;
  std::vector<std::uint32_t> col_indices_;
};

/// s[v] = 1 / sqrt(|N(v)|), 0 for isolated nodes. The weight of edge (u, v)
/// in the aggregation is s[u] * s[v].
inline std::vector<double> degree_norms(const CsrAdjacency& adj) {
  std::vector<double> s(adj.num_nodes(), 0.0);
  for (std::size_t v = 0; v < adj.num_nodes(); ++v) {
    const std::size_t d = adj.degree(v);
    if (d > 0) s[v] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  return s;
}

/// out[v, :] = sum over u in N(v) of s[u] * s[v] * h[u, :]
template <typename T>
Matrix<T> spmm_norm(const CsrAdjacency& adj, std::span<const T> s, const Matrix<T>& h) {
  if (h.rows() != adj.num_nodes() || s.size() != adj.num_nodes())
    throw ShapeError("spmm_norm: " + shape_string(h) + " against " +
                     std::to_string(adj.num_nodes()) + " nodes");
  const std::size_t width = h.cols();
  Matrix<T> out(h.rows(), width);
  for (std::size_t v = 0; v < adj.num_nodes(); ++v) {
    T* o = out.data() + v * width;
    for (std::uint32_t u : adj.neighbors(v)) {
      const T w = s[u];
      const T* src = h.data() + static_cast<std::size_t>(u) * width;
      for (std::size_t j = 0; j < width; ++j) o[j] += w * src[j];
    }
    const T sv = s[v];
    for (std::size_t j = 0; j < width; ++j) o[j] *= sv;
  }
  return out;
}

/// Transpose of spmm_norm: out[u, :] = sum over v with u in N(v) of
/// s[u] * s[v] * g[v, :]. For symmetric adjacency this equals spmm_norm.
template <typename T>
Matrix<T> spmm_norm_transpose(const CsrAdjacency& adj, std::span<const T> s,
                              const Matrix<T>& g) {
  if (adj.symmetric()) return spmm_norm(adj, s, g);
  if (g.rows() != adj.num_nodes() || s.size() != adj.num_nodes())
    throw ShapeError("spmm_norm_transpose: shape mismatch");
  const std::size_t width = g.cols();
  Matrix<T> out(g.rows(), width);
  for (std::size_t v = 0; v < adj.num_nodes(); ++v) {
    const T sv = s[v];
    const T* src = g.data() + v * width;
    for (std::uint32_t u : adj.neighbors(v)) {
      const T w = sv * s[u];
      T* o = out.data() + static_cast<std::size_t>(u) * width;
      for (std::size_t j = 0; j < width; ++j) o[j] += w * src[j];
    }
  }
  return out;
}

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

/// Graph structure plus node features, labels and split tags. Immutable once
/// built; shared read-only by every worker.
struct AttributedGraph {
  CsrAdjacency adj;
  Matrix<float> features;
  std::vector<std::uint32_t> labels;
  std::size_t num_classes = 0;
  std::vector<Split> split;
  std::vector<double> norm_scale;

  static AttributedGraph make(CsrAdjacency adj, Matrix<float> features,
                              std::vector<std::uint32_t> labels, std::size_t num_classes,
                              std::vector<Split> split) {
    AttributedGraph g{std::move(adj), std::move(features), std::move(labels), num_classes,
                      std::move(split), {}};
    g.norm_scale = degree_norms(g.adj);
    g.validate();
    return g;
  }

  std::size_t num_nodes() const { return adj.num_nodes(); }
  std::size_t num_features() const { return features.cols(); }

  std::vector<std::uint32_t> nodes_in(Split s) const {
    std::vector<std::uint32_t> out;
    for (std::size_t v = 0; v < split.size(); ++v)
      if (split[v] == s) out.push_back(static_cast<std::uint32_t>(v));
    return out;
  }

  void validate() const {
    const std::size_t n = num_nodes();
    if (features.rows() != n) throw DataError("feature rows != node count");
    if (labels.size() != n) throw DataError("label count != node count");
    if (split.size() != n) throw DataError("split count != node count");
    if (norm_scale.size() != n) throw DataError("norm_scale size != node count");
    if (num_classes == 0) throw DataError("num_classes must be positive");
    for (std::size_t v = 0; v < n; ++v) {
      if (labels[v] >= num_classes)
        throw DataError("label " + std::to_string(labels[v]) + " of node " + std::to_string(v) +
                        " >= num_classes " + std::to_string(num_classes));
      if (static_cast<std::uint8_t>(split[v]) > 2)
        throw DataError("invalid split tag at node " + std::to_string(v));
    }
    if (!all_finite(features)) throw DataError("non-finite feature value");
  }
};

}  // namespace slicegcn
