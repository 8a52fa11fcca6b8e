#pragma once

#include <array>
#include <span>
#include <string>

#include "slicegcn/layers.hpp"
#include "slicegcn/slicing.hpp"

namespace slicegcn {

/// Output width of the fusion MLP for p devices: ceil(d / p) + 1.
inline std::size_t fusion_width(std::size_t in_features, std::size_t devices) {
  return ceil_div(in_features, devices) + 1;
}

/// Shared two-layer MLP (d -> d -> ceil(d/p)+1) that compresses the full
/// feature matrix into the per-device input. Every device receives the same
/// output, so the gradient it sees is the sum of the device input gradients.
template <typename T>
class FeatureFusion {
 public:
  FeatureFusion() = default;
  FeatureFusion(std::size_t in_features, std::size_t devices, Rng& rng) {
    const std::array<std::size_t, 3> widths{in_features, in_features,
                                            fusion_width(in_features, devices)};
    mlp_ = Mlp<T>(widths, rng);
  }

  std::size_t in_width() const { return mlp_.in_width(); }
  std::size_t out_width() const { return mlp_.out_width(); }
  Mlp<T>& mlp() { return mlp_; }

  Matrix<T> forward(const Matrix<T>& x, double dropout_rate, bool training, Rng& rng) {
    return mlp_.forward(x, dropout_rate, training, rng);
  }

  /// `device_grads` are d loss / d input from each device, summed in the
  /// order given. The gradient w.r.t. the raw features is not needed.
  void backward(std::span<const Matrix<T>> device_grads) {
    if (device_grads.empty()) throw ShapeError("fusion backward: no device gradients");
    Matrix<T> total = device_grads.front();
    for (std::size_t i = 1; i < device_grads.size(); ++i) add_inplace(total, device_grads[i]);
    mlp_.backward(std::move(total), false);
  }

  void collect(ParamList<T>& out, const std::string& prefix) { mlp_.collect(out, prefix); }

 private:
  Mlp<T> mlp_;
};

}  // namespace slicegcn
