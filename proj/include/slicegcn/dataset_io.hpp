#pragma once

// Dataset directory layout (all multi-byte values little-endian):
//   meta.json     {"num_nodes": n, "num_features": d, "num_classes": c, "directed": bool}
//   edges.bin     (u: u32, v: u32) pairs
//   features.bin  n * d float32, row-major
//   labels.bin    n u32
//   splits.bin    n u8, 0 = train, 1 = val, 2 = test

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicegcn/error.hpp"
#include "slicegcn/graph.hpp"

namespace slicegcn {

struct LoadOptions {
  bool keep_direction = false;  // directed inputs use in-neighborhoods instead of symmetrizing
  bool self_loops = false;
};

struct DatasetMeta {
  std::size_t num_nodes = 0;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  bool directed = false;
};

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void expect_size(const std::filesystem::path& path, std::size_t actual,
                        std::size_t expected) {
  if (actual != expected)
    throw DataError("size mismatch in " + path.string() + ": " + std::to_string(actual) +
                    " bytes, expected " + std::to_string(expected));
}

inline std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void store_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

inline DatasetMeta read_meta(const std::filesystem::path& dir) {
  const auto path = dir / "meta.json";
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  DatasetMeta meta;
  try {
    const auto j = nlohmann::json::parse(in);
    meta.num_nodes = j.at("num_nodes").get<std::size_t>();
    meta.num_features = j.at("num_features").get<std::size_t>();
    meta.num_classes = j.at("num_classes").get<std::size_t>();
    meta.directed = j.value("directed", false);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + path.string() + ": " + e.what());
  }
  if (meta.num_nodes > UINT32_MAX) throw DataError("num_nodes exceeds u32 range");
  return meta;
}

inline AttributedGraph load_dataset(const std::filesystem::path& dir, const LoadOptions& opts = {}) {
  const DatasetMeta meta = read_meta(dir);
  const std::size_t n = meta.num_nodes, d = meta.num_features;

  const auto edges_path = dir / "edges.bin";
  const auto edge_bytes = detail::read_file(edges_path);
  if (edge_bytes.size() % 8 != 0)
    throw DataError("size mismatch in " + edges_path.string() + ": " +
                    std::to_string(edge_bytes.size()) + " bytes is not a multiple of 8");
  std::vector<Edge> edges(edge_bytes.size() / 8);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = {detail::load_u32(&edge_bytes[8 * i]), detail::load_u32(&edge_bytes[8 * i + 4])};

  const auto feat_path = dir / "features.bin";
  const auto feat_bytes = detail::read_file(feat_path);
  detail::expect_size(feat_path, feat_bytes.size(), n * d * 4);
  Matrix<float> features(n, d);
  for (std::size_t i = 0; i < n * d; ++i) {
    const std::uint32_t bits = detail::load_u32(&feat_bytes[4 * i]);
    const float v = std::bit_cast<float>(bits);
    if (!std::isfinite(v))
      throw DataError("non-finite feature value in " + feat_path.string() + " at node " +
                      std::to_string(i / d) + ", column " + std::to_string(i % d));
    features.data()[i] = v;
  }

  const auto label_path = dir / "labels.bin";
  const auto label_bytes = detail::read_file(label_path);
  detail::expect_size(label_path, label_bytes.size(), n * 4);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = detail::load_u32(&label_bytes[4 * i]);

  const auto split_path = dir / "splits.bin";
  const auto split_bytes = detail::read_file(split_path);
  detail::expect_size(split_path, split_bytes.size(), n);
  std::vector<Split> split(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (split_bytes[i] > 2)
      throw DataError("invalid split tag " + std::to_string(split_bytes[i]) + " in " +
                      split_path.string() + " at node " + std::to_string(i));
    split[i] = static_cast<Split>(split_bytes[i]);
  }

  const EdgeMode mode = meta.directed && opts.keep_direction ? EdgeMode::kInNeighbors
                                                             : EdgeMode::kSymmetrize;
  auto adj = CsrAdjacency::from_edges(n, edges, mode, opts.self_loops);
  return AttributedGraph::make(std::move(adj), std::move(features), std::move(labels),
                               meta.num_classes, std::move(split));
}

/// Writes `g` in the directory layout above. Symmetric graphs are stored
/// once per undirected edge with directed = false.
inline void save_dataset(const AttributedGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const bool directed = !g.adj.symmetric();

  nlohmann::json meta = {{"num_nodes", g.num_nodes()},
                         {"num_features", g.num_features()},
                         {"num_classes", g.num_classes},
                         {"directed", directed}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";

  std::vector<unsigned char> bytes;
  for (const Edge& e : g.adj.edges()) {
    if (!directed && e.u > e.v) continue;
    detail::store_u32(bytes, e.u);
    detail::store_u32(bytes, e.v);
  }
  detail::write_file(dir / "edges.bin", bytes);

  bytes.clear();
  for (float v : g.features.values()) detail::store_u32(bytes, std::bit_cast<std::uint32_t>(v));
  detail::write_file(dir / "features.bin", bytes);

  bytes.clear();
  for (std::uint32_t l : g.labels) detail::store_u32(bytes, l);
  detail::write_file(dir / "labels.bin", bytes);

  bytes.clear();
  for (Split s : g.split) bytes.push_back(static_cast<unsigned char>(s));
  detail::write_file(dir / "splits.bin", bytes);
}

}  // namespace slicegcn
