#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/graph.hpp"
#include "slicegcn/matrix.hpp"
#include "slicegcn/rng.hpp"

namespace slicegcn {

/// A trainable tensor and its gradient buffer, as seen by optimizers and
/// gradient checks.
template <typename T>
struct ParamRef {
  std::string name;
  Matrix<T>* value = nullptr;
  Matrix<T>* grad = nullptr;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;

template <typename T>
std::size_t count_entries(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value->size();
  return n;
}

template <typename T>
void zero_grads(const ParamList<T>& params) {
  for (const auto& p : params) p.grad->fill(T(0));
}

enum class LayerForm {
  kAggregate,  // h' = ReLU(b + A_hat h W_agg)
  kAggregateSelf,  // h' = ReLU(b + A_hat h W_agg) + h W_self
};

// ---------------------------------------------------------------------------

/// One graph convolution over the full graph. Owns its parameters, gradients
/// and the forward cache needed by backward.
template <typename T>
class GcnLayer {
 public:
  GcnLayer() = default;

  /// `relu_over_sum` moves the self path inside the activation
  /// (ReLU(b + A_hat h W_agg + h W_self)); only meaningful for kAggregateSelf.
  GcnLayer(std::size_t in, std::size_t out, LayerForm form, Rng& rng, bool relu_over_sum = false)
      : form_(form), relu_over_sum_(relu_over_sum && form == LayerForm::kAggregateSelf) {
    w_agg = glorot_init<T>(in, out, rng);
    if (form == LayerForm::kAggregateSelf) w_self = glorot_init<T>(in, out, rng);
    bias = Matrix<T>(1, out);
    grad_w_agg = Matrix<T>(in, out);
    grad_w_self = Matrix<T>(w_self.rows(), w_self.cols());
    grad_bias = Matrix<T>(1, out);
  }

  std::size_t in_width() const { return w_agg.rows(); }
  std::size_t out_width() const { return w_agg.cols(); }
  LayerForm form() const { return form_; }
  bool has_self_path() const { return form_ == LayerForm::kAggregateSelf; }

  Matrix<T> forward(const CsrAdjacency& adj, std::span<const T> s, const Matrix<T>& in,
                    double dropout_rate, bool training, Rng& rng) {
    if (in.cols() != in_width())
      throw ShapeError("gcn layer: input " + shape_string(in) + " for in_width " +
                       std::to_string(in_width()));
    aggregated_ = spmm_norm(adj, s, in);
    pre_ = matmul(aggregated_, w_agg);
    add_row_vector(pre_, bias.row(0));
    Matrix<T> out;
    if (!has_self_path()) {
      out = relu(pre_);
    } else if (relu_over_sum_) {
      add_inplace(pre_, matmul(in, w_self));
      out = relu(pre_);
    } else {
      out = relu(pre_);
      add_inplace(out, matmul(in, w_self));
    }
    mask_ = dropout_inplace(out, dropout_rate, training, rng);
    return out;
  }

  /// Accumulates parameter gradients for the most recent forward and
  /// returns d loss / d input (empty unless `need_input_grad`).
  Matrix<T> backward(const CsrAdjacency& adj, std::span<const T> s, const Matrix<T>& in,
                     Matrix<T> grad_out, bool need_input_grad) {
    if (grad_out.rows() != pre_.rows() || grad_out.cols() != out_width())
      throw ShapeError("gcn layer backward: gradient " + shape_string(grad_out));
    dropout_backward_inplace(grad_out, mask_);
    Matrix<T> d_pre = relu_backward(pre_, grad_out);
    const Matrix<T>& d_self = relu_over_sum_ ? d_pre : grad_out;

    add_inplace(grad_w_agg, matmul_tn(aggregated_, d_pre));
    add_inplace(grad_bias, column_sums(d_pre));
    if (has_self_path()) add_inplace(grad_w_self, matmul_tn(in, d_self));

    if (!need_input_grad) return {};
    Matrix<T> d_in = spmm_norm_transpose(adj, s, matmul_nt(d_pre, w_agg));
    if (has_self_path()) add_inplace(d_in, matmul_nt(d_self, w_self));
    return d_in;
  }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".w_agg", &w_agg, &grad_w_agg});
    if (has_self_path()) out.push_back({prefix + ".w_self", &w_self, &grad_w_self});
    out.push_back({prefix + ".bias", &bias, &grad_bias});
  }

  Matrix<T> w_agg, w_self, bias;
  Matrix<T> grad_w_agg, grad_w_self, grad_bias;

 private:
  LayerForm form_ = LayerForm::kAggregateSelf;
  bool relu_over_sum_ = false;
  Matrix<T> aggregated_;  // A_hat * input
  Matrix<T> pre_;         // argument of the ReLU
  DropoutMask mask_;
};

// ---------------------------------------------------------------------------

template <typename T>
struct Linear {
  Matrix<T> weight, bias;
  Matrix<T> grad_weight, grad_bias;
};

/// Fully connected stack: Linear, then ReLU + dropout between layers, no
/// activation after the last one.
template <typename T>
class Mlp {
 public:
  Mlp() = default;

  /// widths = {in, hidden..., out}
  Mlp(std::span<const std::size_t> widths, Rng& rng) {
    if (widths.size() < 2) throw ConfigError("mlp: need at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      Linear<T> l;
      l.weight = glorot_init<T>(widths[i], widths[i + 1], rng);
      l.bias = Matrix<T>(1, widths[i + 1]);
      l.grad_weight = Matrix<T>(widths[i], widths[i + 1]);
      l.grad_bias = Matrix<T>(1, widths[i + 1]);
      layers_.push_back(std::move(l));
    }
  }

  std::size_t in_width() const { return layers_.front().weight.rows(); }
  std::size_t out_width() const { return layers_.back().weight.cols(); }
  std::size_t depth() const { return layers_.size(); }
  std::vector<Linear<T>>& layers() { return layers_; }
  const std::vector<Linear<T>>& layers() const { return layers_; }

  Matrix<T> forward(const Matrix<T>& in, double dropout_rate, bool training, Rng& rng) {
    if (in.cols() != in_width())
      throw ShapeError("mlp: input " + shape_string(in) + " for in_width " + std::to_string(in_width()));
    inputs_.assign(1, in);
    pre_.clear();
    masks_.clear();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Matrix<T> z = matmul(inputs_.back(), layers_[i].weight);
      add_row_vector(z, layers_[i].bias.row(0));
      if (i + 1 == layers_.size()) return z;
      Matrix<T> a = relu(z);
      pre_.push_back(std::move(z));
      masks_.push_back(dropout_inplace(a, dropout_rate, training, rng));
      inputs_.push_back(std::move(a));
    }
    return {};
  }

  Matrix<T> backward(Matrix<T> grad_out, bool need_input_grad) {
    if (inputs_.size() != layers_.size()) throw ShapeError("mlp backward: no matching forward");
    if (grad_out.cols() != out_width() || grad_out.rows() != inputs_.front().rows())
      throw ShapeError("mlp backward: gradient " + shape_string(grad_out));
    for (std::size_t i = layers_.size(); i-- > 0;) {
      Linear<T>& l = layers_[i];
      add_inplace(l.grad_weight, matmul_tn(inputs_[i], grad_out));
      add_inplace(l.grad_bias, column_sums(grad_out));
      if (i == 0 && !need_input_grad) return {};
      Matrix<T> d_in = matmul_nt(grad_out, l.weight);
      if (i == 0) return d_in;
      dropout_backward_inplace(d_in, masks_[i - 1]);
      grad_out = relu_backward(pre_[i - 1], d_in);
    }
    return {};
  }

  void collect(ParamList<T>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      out.push_back({prefix + "." + std::to_string(i) + ".weight", &layers_[i].weight,
                     &layers_[i].grad_weight});
      out.push_back({prefix + "." + std::to_string(i) + ".bias", &layers_[i].bias,
                     &layers_[i].grad_bias});
    }
  }

 private:
  std::vector<Linear<T>> layers_;
  std::vector<Matrix<T>> inputs_;  // input of each Linear, post-dropout
  std::vector<Matrix<T>> pre_;     // pre-activation of each hidden layer
  std::vector<DropoutMask> masks_;
};

// ---------------------------------------------------------------------------

/// Learned per-device offset: device i adds row i of the table to every node
/// representation it produced.
template <typename T>
class SliceEncoding {
 public:
  SliceEncoding() = default;
  SliceEncoding(std::size_t devices, std::size_t width, Rng& rng)
      : table(glorot_init<T>(devices, width, rng)), grad_table(devices, width) {}

  std::size_t devices() const { return table.rows(); }
  std::size_t width() const { return table.cols(); }

  Matrix<T> forward(Matrix<T> h, std::size_t device) const {
    check(h, device);
    add_row_vector(h, table.row(device));
    return h;
  }

  /// The input gradient is the output gradient unchanged; only the table
  /// row of `device` receives gradient.
  void backward(const Matrix<T>& grad_out, std::size_t device) {
    check(grad_out, device);
    const Matrix<T> sums = column_sums(grad_out);
    auto g = grad_table.row(device);
    for (std::size_t j = 0; j < width(); ++j) g[j] += sums(0, j);
  }

  void collect(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".table", &table, &grad_table});
  }

  Matrix<T> table, grad_table;

 private:
  void check(const Matrix<T>& h, std::size_t device) const {
    if (device >= devices()) throw ShapeError("slice encoding: device index out of range");
    if (h.cols() != width()) throw ShapeError("slice encoding: width mismatch " + shape_string(h));
  }
};

}  // namespace slicegcn
