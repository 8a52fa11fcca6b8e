#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/layers.hpp"

namespace slicegcn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers mirroring a parameter list, plus the step count.
template <typename T>
struct AdamState {
  std::vector<Matrix<T>> m, v;
  std::int64_t t = 0;
  AdamOptions options;
};

/// One bias-corrected Adam update over `params` using their grad buffers.
/// Throws NumericError, leaving everything untouched, if any gradient is
/// not finite.
template <typename T>
void adam_step(const ParamList<T>& params, AdamState<T>& state, double lr) {
  for (const auto& p : params) {
    if (!same_shape(*p.value, *p.grad))
      throw ShapeError("adam: gradient shape mismatch for " + p.name);
    if (!all_finite(*p.grad)) throw NumericError("adam: non-finite gradient in " + p.name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value->rows(), p.value->cols());
      state.v.emplace_back(p.value->rows(), p.value->cols());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam: state does not match parameters");

  ++state.t;
  const double b1 = state.options.beta1, b2 = state.options.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  const T one_b1 = static_cast<T>(1.0 - b1), one_b2 = static_cast<T>(1.0 - b2);
  const T inv_c1 = static_cast<T>(1.0 / c1), inv_c2 = static_cast<T>(1.0 / c2);
  const T tlr = static_cast<T>(lr), eps = static_cast<T>(state.options.eps);

  for (std::size_t k = 0; k < params.size(); ++k) {
    T* w = params[k].value->data();
    const T* g = params[k].grad->data();
    T* m = state.m[k].data();
    T* v = state.v[k].data();
    for (std::size_t i = 0; i < params[k].value->size(); ++i) {
      m[i] = tb1 * m[i] + one_b1 * g[i];
      v[i] = tb2 * v[i] + one_b2 * g[i] * g[i];
      const T m_hat = m[i] * inv_c1;
      const T v_hat = v[i] * inv_c2;
      w[i] -= tlr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

/// Cosine annealing: lr_min + (lr0 - lr_min) * (1 + cos(pi * t / total)) / 2.
inline double cosine_lr(std::size_t t, std::size_t total, double lr0, double lr_min = 0.0) {
  if (total == 0) throw ConfigError("cosine_lr: horizon must be positive");
  if (t > total) throw ConfigError("cosine_lr: step past horizon");
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

}  // namespace slicegcn
