#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <type_traits>
#include <string>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/rng.hpp"

namespace slicegcn {

/// Row-major dense matrix. Biases and other vectors are stored as 1 x n.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("from_rows: ragged rows");
      std::copy(row.begin(), row.end(), m.data_.begin() + i * c);
      ++i;
    }
    return m;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
std::string shape_string(const Matrix<T>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

template <typename To, typename From>
Matrix<To> cast(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  std::transform(m.values().begin(), m.values().end(), out.values().begin(),
                 [](From v) { return static_cast<To>(v); });
  return out;
}

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
bool same_shape(const Matrix<T>& a, const Matrix<T>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

// ---------------------------------------------------------------------------
// Linear algebra. All reductions run in a fixed sequential order so results
// are bit-identical between runs.

/// C = A * B
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_string(a) + " * " + shape_string(b));
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix<T> c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    T* crow = c.data() + i * m;
    const T* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

/// C = A^T * B
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn: " + shape_string(a) + "^T * " + shape_string(b));
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix<T> c(k, m);
  for (std::size_t r = 0; r < n; ++r) {
    const T* arow = a.data() + r * k;
    const T* brow = b.data() + r * m;
    for (std::size_t i = 0; i < k; ++i) {
      const T av = arow[i];
      if (av == T(0)) continue;
      T* crow = c.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// C = A * B^T
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + shape_string(a) + " * " + shape_string(b) + "^T");
  return matmul(a, transpose(b));
}

/// y += alpha * x
template <typename T>
void axpy(Matrix<T>& y, T alpha, const Matrix<T>& x) {
  if (!same_shape(x, y)) throw ShapeError("axpy: " + shape_string(y) + " vs " + shape_string(x));
  T* yd = y.data();
  const T* xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) yd[i] += alpha * xd[i];
}

template <typename T>
void add_inplace(Matrix<T>& y, const Matrix<T>& x) {
  axpy(y, T(1), x);
}

/// Adds a 1 x cols row vector to every row of m.
template <typename T>
void add_row_vector(Matrix<T>& m, std::span<const std::type_identity_t<T>> v) {
  if (v.size() != m.cols()) throw ShapeError("add_row_vector: width mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    T* row = m.data() + r * m.cols();
    for (std::size_t j = 0; j < m.cols(); ++j) row[j] += v[j];
  }
}

template <typename T>
Matrix<T> column_sums(const Matrix<T>& m) {
  Matrix<T> s(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const T* row = m.data() + r * m.cols();
    for (std::size_t j = 0; j < m.cols(); ++j) s(0, j) += row[j];
  }
  return s;
}

/// Columns [start, start + width) as a new matrix.
template <typename T>
Matrix<T> column_block(const Matrix<T>& m, std::size_t start, std::size_t width) {
  if (start + width > m.cols()) throw ShapeError("column_block: range past last column");
  Matrix<T> out(m.rows(), width);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r).subspan(start, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

/// Appends `extra` zero columns.
template <typename T>
Matrix<T> pad_columns(const Matrix<T>& m, std::size_t extra) {
  Matrix<T> out(m.rows(), m.cols() + extra);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

/// Column-wise concatenation in the order given.
template <typename T>
Matrix<T> concat_columns(std::span<const Matrix<T>> blocks) {
  if (blocks.empty()) return {};
  const std::size_t n = blocks.front().rows();
  std::size_t width = 0;
  for (const auto& b : blocks) {
    if (b.rows() != n) throw ShapeError("concat_columns: row count mismatch");
    width += b.cols();
  }
  Matrix<T> out(n, width);
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = out.row(r).begin();
    for (const auto& b : blocks) dst = std::copy(b.row(r).begin(), b.row(r).end(), dst);
  }
  return out;
}

template <typename T>
Matrix<T> gather_rows(const Matrix<T>& m, std::span<const std::uint32_t> rows) {
  Matrix<T> out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) throw ShapeError("gather_rows: row index out of range");
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initialization.

/// Glorot/Xavier uniform: U(-a, a) with a = sqrt(6 / (rows + cols)).
template <typename T>
Matrix<T> glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ConfigError("glorot_init: empty shape");
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix<T> m(rows, cols);
  for (auto& v : m.values()) v = static_cast<T>(rng.uniform(-a, a));
  return m;
}

// ---------------------------------------------------------------------------
// Activations.

template <typename T>
Matrix<T> relu(const Matrix<T>& a) {
  Matrix<T> out(a.rows(), a.cols());
  const T* in = a.data();
  T* o = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = in[i] > T(0) ? in[i] : T(0);
  return out;
}

/// Gradient passes where the forward input was strictly positive; the
/// subgradient at exactly 0 is 0.
template <typename T>
Matrix<T> relu_backward(const Matrix<T>& input, const Matrix<T>& grad_out) {
  if (!same_shape(input, grad_out)) throw ShapeError("relu_backward: shape mismatch");
  Matrix<T> out(input.rows(), input.cols());
  const T* in = input.data();
  const T* g = grad_out.data();
  T* o = out.data();
  for (std::size_t i = 0; i < input.size(); ++i) o[i] = in[i] > T(0) ? g[i] : T(0);
  return out;
}

struct DropoutMask {
  std::vector<std::uint8_t> keep;  // empty when dropout was a no-op
  double scale = 1.0;

  bool active() const { return !keep.empty(); }
};

/// Inverted dropout in place. A no-op (and no rng draws) when not training
/// or when rate is 0.
template <typename T>
DropoutMask dropout_inplace(Matrix<T>& a, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
  DropoutMask mask;
  if (!training || rate == 0.0) return mask;
  mask.scale = 1.0 / (1.0 - rate);
  mask.keep.resize(a.size());
  const T scale = static_cast<T>(mask.scale);
  T* d = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool keep = rng.uniform() >= rate;
    mask.keep[i] = keep ? 1 : 0;
    d[i] = keep ? d[i] * scale : T(0);
  }
  return mask;
}

template <typename T>
struct Dropped {
  Matrix<T> out;
  DropoutMask mask;
};

template <typename T>
Dropped<T> dropout(const Matrix<T>& a, double rate, bool training, Rng& rng) {
  Dropped<T> r{a, {}};
  r.mask = dropout_inplace(r.out, rate, training, rng);
  return r;
}

template <typename T>
void dropout_backward_inplace(Matrix<T>& grad, const DropoutMask& mask) {
  if (!mask.active()) return;
  if (mask.keep.size() != grad.size()) throw ShapeError("dropout_backward: mask size mismatch");
  const T scale = static_cast<T>(mask.scale);
  T* g = grad.data();
  for (std::size_t i = 0; i < grad.size(); ++i) g[i] = mask.keep[i] ? g[i] * scale : T(0);
}

// ---------------------------------------------------------------------------
// Loss.

template <typename T>
Matrix<T> softmax(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto out = p.row(r);
    const T mx = *std::max_element(in.begin(), in.end());
    T sum = 0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (auto& v : out) v /= sum;
  }
  return p;
}

template <typename T>
struct CrossEntropy {
  double loss = 0.0;
  Matrix<T> grad;  // d(mean loss)/d(logits), already divided by the row count
};

/// Mean softmax cross-entropy over the rows of `logits`.
template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Matrix<T>& logits,
                                      std::span<const std::uint32_t> labels) {
  const std::size_t m = logits.rows(), c = logits.cols();
  if (m == 0) throw ConfigError("softmax_cross_entropy: empty batch");
  if (labels.size() != m) throw ShapeError("softmax_cross_entropy: label count mismatch");
  CrossEntropy<T> ce;
  ce.grad = Matrix<T>(m, c);
  const T inv_m = static_cast<T>(1.0 / static_cast<double>(m));
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (labels[r] >= c) throw ConfigError("softmax_cross_entropy: label out of range");
    const auto in = logits.row(r);
    auto g = ce.grad.row(r);
    const auto top = static_cast<std::size_t>(std::max_element(in.begin(), in.end()) - in.begin());
    const T mx = in[top];
    // sum = 1 + rest; keeping rest separate preserves precision when one
    // logit dominates
    T rest = 0;
    for (std::size_t j = 0; j < c; ++j) {
      g[j] = j == top ? T(1) : std::exp(in[j] - mx);
      if (j != top) rest += g[j];
    }
    const T sum = 1 + rest;
    total += static_cast<double>(std::log1p(rest) - (in[labels[r]] - mx));
    for (std::size_t j = 0; j < c; ++j) {
      T d;
      if (j != labels[r]) d = g[j] / sum;
      else if (j == top) d = -rest / sum;
      else d = g[j] / sum - 1;
      g[j] = d * inv_m;
    }
  }
  ce.loss = total / static_cast<double>(m);
  return ce;
}

}  // namespace slicegcn
