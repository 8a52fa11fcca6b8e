#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/fusion.hpp"
#include "slicegcn/layers.hpp"
#include "slicegcn/slicing.hpp"

namespace slicegcn {

enum class Variant { kBaseline, kSlice, kSliceSe, kSliceFf, kSliceFfse };

inline bool uses_fusion(Variant v) { return v == Variant::kSliceFf || v == Variant::kSliceFfse; }
inline bool uses_encoding(Variant v) { return v == Variant::kSliceSe || v == Variant::kSliceFfse; }

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kSlice: return "slice";
    case Variant::kSliceSe: return "slice_se";
    case Variant::kSliceFf: return "slice_ff";
    case Variant::kSliceFfse: return "slice_ffse";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  for (Variant v : {Variant::kBaseline, Variant::kSlice, Variant::kSliceSe, Variant::kSliceFf,
                    Variant::kSliceFfse})
    if (variant_name(v) == s) return v;
  return std::nullopt;
}

inline std::string_view layer_form_name(LayerForm f) { return f == LayerForm::kAggregate ? "agg" : "agg_self"; }

inline std::optional<LayerForm> parse_layer_form(std::string_view s) {
  if (s == "agg") return LayerForm::kAggregate;
  if (s == "agg_self") return LayerForm::kAggregateSelf;
  return std::nullopt;
}

/// Everything that fixes the parameter shapes of a run.
struct ModelShape {
  Variant variant = Variant::kSlice;
  std::size_t in_features = 0;
  std::size_t devices = 1;
  std::size_t hidden = 64;     // total hidden width; each device gets ceil(hidden / p)
  std::size_t layers = 2;      // GCN layers per device
  std::size_t num_classes = 2;
  std::size_t classifier_layers = 2;
  double slice_scale = 1.0;
  LayerForm form = LayerForm::kAggregateSelf;
};

/// Widths derived from a ModelShape.
struct WidthPlan {
  SliceStrategy strategy;
  std::size_t devices = 1;
  std::size_t worker_in = 0;      // first-layer input width on each device
  std::size_t worker_hidden = 0;  // every GCN layer output width on each device
  std::size_t fusion_out = 0;     // 0 without feature fusion
  std::size_t concat_width = 0;   // devices * worker_hidden
  std::vector<std::size_t> classifier_widths;
};

/// Device count actually used: the baseline always runs on one device.
inline std::size_t effective_devices(const ModelShape& s) {
  return s.variant == Variant::kBaseline ? 1 : s.devices;
}

/// Direct slices carry one extra all-zero column so that the device input
/// width is ceil(d / p) + 1 with or without feature fusion.
inline WidthPlan plan_widths(const ModelShape& s) {
  const std::size_t p = effective_devices(s);
  if (p == 0) throw ConfigError("device count must be positive");
  if (s.in_features == 0) throw ConfigError("feature dimension must be positive");
  if (p > s.in_features)
    throw ConfigError("device count " + std::to_string(p) + " exceeds feature dimension " +
                      std::to_string(s.in_features));
  if (s.hidden == 0) throw ConfigError("hidden width must be positive");
  if (s.layers == 0) throw ConfigError("need at least one GCN layer");
  if (s.num_classes < 2) throw ConfigError("need at least two classes");
  if (s.classifier_layers == 0) throw ConfigError("need at least one classifier layer");
  const double scale = s.variant == Variant::kBaseline ? 1.0 : s.slice_scale;

  WidthPlan w;
  w.strategy = slice_strategy_generator(s.in_features, p, scale);
  w.devices = p;
  if (uses_fusion(s.variant)) {
    w.fusion_out = fusion_width(s.in_features, p);
    w.worker_in = w.fusion_out;
  } else {
    w.worker_in = w.strategy.width() + 1;
  }
  w.worker_hidden = ceil_div(s.hidden, p);
  w.concat_width = p * w.worker_hidden;
  w.classifier_widths.push_back(w.concat_width);
  for (std::size_t i = 1; i < s.classifier_layers; ++i) w.classifier_widths.push_back(s.hidden);
  w.classifier_widths.push_back(s.num_classes);
  return w;
}

struct ParamBreakdown {
  std::size_t workers = 0;
  std::size_t fusion = 0;
  std::size_t encoding = 0;
  std::size_t classifier = 0;

  std::size_t total() const { return workers + fusion + encoding + classifier; }
  bool operator==(const ParamBreakdown&) const = default;
};

/// Closed-form parameter count (weights and biases) of a model with this shape.
inline ParamBreakdown count_params(const ModelShape& s) {
  const WidthPlan w = plan_widths(s);
  const std::size_t per_matrix = s.form == LayerForm::kAggregateSelf ? 2 : 1;
  ParamBreakdown b;
  std::size_t per_worker = 0;
  std::size_t in = w.worker_in;
  for (std::size_t l = 0; l < s.layers; ++l) {
    per_worker += per_matrix * in * w.worker_hidden + w.worker_hidden;
    in = w.worker_hidden;
  }
  b.workers = w.devices * per_worker;
  if (uses_fusion(s.variant))
    b.fusion = s.in_features * s.in_features + s.in_features + s.in_features * w.fusion_out +
               w.fusion_out;
  if (uses_encoding(s.variant)) b.encoding = w.devices * w.worker_hidden;
  for (std::size_t i = 0; i + 1 < w.classifier_widths.size(); ++i)
    b.classifier += w.classifier_widths[i] * w.classifier_widths[i + 1] + w.classifier_widths[i + 1];
  return b;
}

}  // namespace slicegcn
