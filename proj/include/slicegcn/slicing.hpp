#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/matrix.hpp"

namespace slicegcn {

/// Half-open column range [start, end).
struct SliceRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t width() const { return end - start; }
  bool operator==(const SliceRange&) const = default;
};

struct SliceStrategy {
  std::vector<SliceRange> ranges;  // one per device
  std::size_t slice_size = 0;      // ceil(in_d / p)
  double scale = 1.0;

  std::size_t devices() const { return ranges.size(); }
  /// Common width of every range: floor(slice_size * scale).
  std::size_t width() const { return ranges.empty() ? 0 : ranges.front().width(); }
};

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// Device i takes [i * slice_size, i * slice_size + floor(slice_size * scale));
/// a range running past in_d is shifted back so it ends at in_d, which keeps
/// every width equal (the tail slices may overlap their predecessors).
inline SliceStrategy slice_strategy_generator(std::size_t in_d, std::size_t p, double scale = 1.0) {
  if (in_d == 0) throw ConfigError("slice strategy: feature dimension must be positive");
  if (p == 0) throw ConfigError("slice strategy: device count must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ConfigError("slice strategy: scale must be a positive finite number");

  SliceStrategy s;
  s.slice_size = ceil_div(in_d, p);
  s.scale = scale;
  const auto width =
      static_cast<std::size_t>(std::floor(static_cast<double>(s.slice_size) * scale));
  if (width == 0)
    throw ConfigError("slice strategy: scale " + std::to_string(scale) + " gives zero-width slices");
  if (width > in_d)
    throw ConfigError("slice strategy: slice width " + std::to_string(width) +
                      " exceeds feature dimension " + std::to_string(in_d));
  s.ranges.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    std::size_t start = i * s.slice_size;
    std::size_t end = start + width;
    if (end > in_d) {
      start -= end - in_d;
      end = in_d;
    }
    s.ranges.push_back({start, end});
  }
  return s;
}

/// Column block of x per range, one copy per device.
template <typename T>
std::vector<Matrix<T>> slice_feature(const Matrix<T>& x, const SliceStrategy& strategy) {
  std::vector<Matrix<T>> out;
  out.reserve(strategy.devices());
  for (const SliceRange& r : strategy.ranges) {
    if (r.end > x.cols() || r.start >= r.end)
      throw ShapeError("slice_feature: range [" + std::to_string(r.start) + ", " +
                       std::to_string(r.end) + ") invalid for " + std::to_string(x.cols()) +
                       " columns");
    out.push_back(column_block(x, r.start, r.width()));
  }
  return out;
}

}  // namespace slicegcn
