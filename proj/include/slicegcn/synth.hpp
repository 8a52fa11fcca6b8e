#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/graph.hpp"
#include "slicegcn/rng.hpp"

namespace slicegcn {

struct SynthParams {
  std::size_t num_nodes = 400;
  std::size_t num_classes = 2;
  std::size_t num_features = 8;
  double p_in = 0.05;
  double p_out = 0.005;
  double signal = 1.0;
  std::uint64_t seed = 1;
};

namespace detail {

// Independent rng streams per generation stage.
inline constexpr std::uint64_t kSynthEdgeStream = 0x5e00;
inline constexpr std::uint64_t kSynthFeatureStream = 0x5e01;
inline constexpr std::uint64_t kSynthSplitStream = 0x5e02;

// Geometric skipping over a linear index of candidate pairs (Batagelj and
// Brandes), so sparse blocks cost O(edges) rather than O(pairs).
template <typename Emit>
void sample_pairs(std::uint64_t num_pairs, double p, Rng& rng, Emit&& emit) {
  if (p <= 0.0 || num_pairs == 0) return;
  if (p >= 1.0) {
    for (std::uint64_t k = 0; k < num_pairs; ++k) emit(k);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t k = 0;
  while (true) {
    const double r = rng.uniform();
    const double skip = std::floor(std::log1p(-r) / log_q);
    if (skip >= static_cast<double>(num_pairs - k)) return;
    k += static_cast<std::uint64_t>(skip);
    emit(k);
    ++k;
    if (k >= num_pairs) return;
  }
}

}  // namespace detail

/// Planted-partition graph. Classes occupy contiguous node blocks; an
/// intra-class pair is linked with probability p_in, an inter-class pair
/// with p_out. Features are signal * onehot(label mod d) plus N(0, 1) noise.
/// Splits are 50/25/25 over a seeded shuffle.
inline AttributedGraph synth_graph(const SynthParams& sp) {
  const std::size_t n = sp.num_nodes, c = sp.num_classes, d = sp.num_features;
  if (c < 2) throw ConfigError("synth_graph: need at least 2 classes");
  if (n < c) throw ConfigError("synth_graph: fewer nodes than classes");
  if (d == 0) throw ConfigError("synth_graph: need at least one feature");
  if (!(sp.p_in >= 0.0 && sp.p_in <= 1.0) || !(sp.p_out >= 0.0 && sp.p_out <= 1.0))
    throw ConfigError("synth_graph: probabilities must lie in [0, 1]");
  if (!(sp.signal >= 0.0)) throw ConfigError("synth_graph: signal must be non-negative");
  if (n > UINT32_MAX) throw ConfigError("synth_graph: too many nodes");

  std::vector<std::size_t> block_start(c + 1);
  for (std::size_t b = 0; b <= c; ++b) block_start[b] = b * n / c;
  std::vector<std::uint32_t> labels(n);
  for (std::size_t b = 0; b < c; ++b)
    for (std::size_t v = block_start[b]; v < block_start[b + 1]; ++v)
      labels[v] = static_cast<std::uint32_t>(b);

  Rng edge_rng(sp.seed, detail::kSynthEdgeStream);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < c; ++a) {
    const std::uint64_t base_a = block_start[a];
    const std::uint64_t size_a = block_start[a + 1] - block_start[a];
    // Within block: pair index k enumerates (i, j), j < i, row by row.
    detail::sample_pairs(size_a * (size_a - 1) / 2, sp.p_in, edge_rng, [&](std::uint64_t k) {
      auto i = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(k))) / 2.0);
      while (i * (i - 1) / 2 > k) --i;
      while ((i + 1) * i / 2 <= k) ++i;
      const std::uint64_t j = k - i * (i - 1) / 2;
      edges.push_back({static_cast<std::uint32_t>(base_a + j), static_cast<std::uint32_t>(base_a + i)});
    });
    for (std::size_t b = a + 1; b < c; ++b) {
      const std::uint64_t base_b = block_start[b];
      const std::uint64_t size_b = block_start[b + 1] - block_start[b];
      detail::sample_pairs(size_a * size_b, sp.p_out, edge_rng, [&](std::uint64_t k) {
        edges.push_back({static_cast<std::uint32_t>(base_a + k / size_b),
                         static_cast<std::uint32_t>(base_b + k % size_b)});
      });
    }
  }

  Rng feat_rng(sp.seed, detail::kSynthFeatureStream);
  Matrix<float> features(n, d);
  for (std::size_t v = 0; v < n; ++v) {
    auto row = features.row(v);
    for (std::size_t j = 0; j < d; ++j) {
      double x = feat_rng.normal();
      if (j == labels[v] % d) x += sp.signal;
      row[j] = static_cast<float>(x);
    }
  }

  Rng split_rng(sp.seed, detail::kSynthSplitStream);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[split_rng.uniform_index(i)]);
  std::vector<Split> split(n, Split::kTest);
  const std::size_t n_train = n / 2, n_val = n / 4;
  for (std::size_t i = 0; i < n_train; ++i) split[order[i]] = Split::kTrain;
  for (std::size_t i = n_train; i < n_train + n_val; ++i) split[order[i]] = Split::kVal;

  auto adj = CsrAdjacency::from_edges(n, edges, EdgeMode::kSymmetrize);
  return AttributedGraph::make(std::move(adj), std::move(features), std::move(labels), c,
                               std::move(split));
}

/// Expected per-node degree of synth_graph with these parameters, used to
/// pick p_in / p_out for a target average degree.
inline double expected_degree(std::size_t n, std::size_t classes, double p_in, double p_out) {
  const double block = static_cast<double>(n) / static_cast<double>(classes);
  return p_in * (block - 1.0) + p_out * (static_cast<double>(n) - block);
}

}  // namespace slicegcn
