#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/fusion.hpp"
#include "slicegcn/graph.hpp"
#include "slicegcn/layers.hpp"
#include "slicegcn/metrics.hpp"
#include "slicegcn/model_shape.hpp"
#include "slicegcn/optim.hpp"
#include "slicegcn/slicing.hpp"
#include "slicegcn/worker_pool.hpp"

namespace slicegcn {

enum class Precision { kF32, kF64 };

inline std::string_view precision_name(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

struct TrainConfig {
  Variant variant = Variant::kSlice;
  std::size_t devices = 2;
  std::size_t epochs = 100;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t classifier_layers = 2;
  double lr = 0.001;
  double lr_min = 0.0;
  double dropout = 0.5;
  double slice_scale = 1.0;
  std::uint64_t seed = 0;
  Precision precision = Precision::kF64;
  LayerForm form = LayerForm::kAggregateSelf;
  bool relu_over_sum = false;
  // Worker threads; defaults to one per device. 0 runs devices sequentially
  // on the calling thread. Never changes results.
  std::optional<std::size_t> threads;

  ModelShape shape(const AttributedGraph& g) const {
    return {variant,     g.num_features(), devices, hidden, layers, g.num_classes, classifier_layers,
            slice_scale, form};
  }
};

struct EvalResult {
  double loss = 0.0;  // cross-entropy on training nodes, dropout off
  double train_metric = 0.0, val_metric = 0.0, test_metric = 0.0;
  double train_acc = 0.0, val_acc = 0.0, test_acc = 0.0;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;  // training-mode loss of the step
  EvalResult eval;
  double epoch_ms = 0.0;
};

struct RunSummary {
  std::string metric;
  std::size_t epochs = 0;
  std::size_t param_count = 0;
  double best_val_metric = 0.0;
  std::size_t best_epoch = 0;  // 0 = the evaluation before any training
  double test_metric_at_best_val = 0.0;
  double test_accuracy_at_best_val = 0.0;
  double final_train_loss = 0.0;
  double final_test_metric = 0.0;
  double final_test_accuracy = 0.0;
  double total_train_seconds = 0.0;
  double throughput_eps = 0.0;  // epochs per second of the training loop

  bool operator==(const RunSummary&) const = default;
};

struct RunResult {
  RunSummary summary;
  EvalResult initial;
  std::vector<EpochReport> epochs;
};

namespace detail {
inline constexpr std::uint64_t kMasterStream = 1ULL << 32;
}

/// One simulated device: a GCN stack over the full graph on its own input
/// slice. Owns parameters, gradients, forward caches, optimizer state and
/// rng stream; only its own pool thread touches it during a parallel phase.
template <typename T>
struct Worker {
  Worker(std::size_t device, const WidthPlan& plan, const ModelShape& shape, bool relu_over_sum,
         std::uint64_t seed)
      : index(device), rng(seed, device) {
    std::size_t in = plan.worker_in;
    for (std::size_t l = 0; l < shape.layers; ++l) {
      layers.emplace_back(in, plan.worker_hidden, shape.form, rng, relu_over_sum);
      in = plan.worker_hidden;
    }
    for (std::size_t l = 0; l < layers.size(); ++l)
      layers[l].collect(params, "worker" + std::to_string(device) + ".layer" + std::to_string(l));
  }

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  /// Runs all layers; dropout on every layer output but the last.
  const Matrix<T>& forward(const CsrAdjacency& adj, std::span<const T> s, const Matrix<T>& x,
                           double dropout_rate, bool training) {
    input = &x;
    outputs.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Matrix<T>& in = l == 0 ? x : outputs[l - 1];
      const double rate = l + 1 < layers.size() ? dropout_rate : 0.0;
      outputs[l] = layers[l].forward(adj, s, in, rate, training, rng);
    }
    return outputs.back();
  }

  void backward(const CsrAdjacency& adj, std::span<const T> s, Matrix<T> grad_out,
                bool need_input_grad) {
    zero_grads(params);
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Matrix<T>& in = l == 0 ? *input : outputs[l - 1];
      const bool want = l > 0 || need_input_grad;
      grad_out = layers[l].backward(adj, s, in, std::move(grad_out), want);
    }
    input_grad = std::move(grad_out);
  }

  std::size_t index;
  Rng rng;
  std::vector<GcnLayer<T>> layers;
  ParamList<T> params;
  AdamState<T> adam;
  const Matrix<T>* input = nullptr;
  std::vector<Matrix<T>> outputs;
  Matrix<T> input_grad;  // d loss / d input, filled when requested
};

/// Feature-sliced parallel GCN. The master holds the optional fusion MLP,
/// the optional slice encoding and the classifier; p workers hold one GCN
/// stack each. Per step: master prepares device inputs, workers run their
/// forwards in parallel, master encodes + concatenates + classifies, then
/// gradient blocks go back to the workers, which backpropagate and update
/// locally while the master updates its own modules.
template <typename T>
class Trainer {
 public:
  Trainer(const AttributedGraph& graph, const TrainConfig& cfg)
      : graph_(graph),
        cfg_(cfg),
        shape_(cfg.shape(graph)),
        plan_(plan_widths(shape_)),
        pool_(cfg.threads.value_or(plan_.devices)),
        master_rng_(cfg.seed, detail::kMasterStream) {
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw ConfigError("learning rate must be >= 0");
    norm_.reserve(graph.num_nodes());
    for (double v : graph.norm_scale) norm_.push_back(static_cast<T>(v));
    train_rows_ = graph.nodes_in(Split::kTrain);
    val_rows_ = graph.nodes_in(Split::kVal);
    test_rows_ = graph.nodes_in(Split::kTest);
    if (train_rows_.empty()) throw ConfigError("graph has no training nodes");
    for (std::uint32_t r : train_rows_) train_labels_.push_back(graph.labels[r]);

    for (std::size_t i = 0; i < plan_.devices; ++i)
      workers_.push_back(
          std::make_unique<Worker<T>>(i, plan_, shape_, cfg.relu_over_sum, cfg.seed));

    if (uses_encoding(cfg.variant))
      encoding_.emplace(plan_.devices, plan_.worker_hidden, master_rng_);
    classifier_ = Mlp<T>(plan_.classifier_widths, master_rng_);
    features_ = cast<T>(graph.features);
    if (uses_fusion(cfg.variant)) {
      fusion_.emplace(graph.num_features(), plan_.devices, master_rng_);
    } else {
      for (auto& slice : slice_feature(features_, plan_.strategy))
        direct_inputs_.push_back(pad_columns(slice, 1));
    }

    if (fusion_) fusion_->collect(master_params_, "fusion");
    if (encoding_) encoding_->collect(master_params_, "encoding");
    classifier_.collect(master_params_, "classifier");
  }

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const ModelShape& shape() const { return shape_; }
  const WidthPlan& plan() const { return plan_; }
  const TrainConfig& config() const { return cfg_; }
  std::size_t devices() const { return workers_.size(); }
  Worker<T>& worker(std::size_t i) { return *workers_.at(i); }
  Mlp<T>& classifier() { return classifier_; }
  std::optional<SliceEncoding<T>>& encoding() { return encoding_; }
  std::optional<FeatureFusion<T>>& fusion() { return fusion_; }

  /// Every trainable tensor: workers in device order, then fusion,
  /// encoding, classifier.
  ParamList<T> parameters() {
    ParamList<T> all;
    for (auto& w : workers_) all.insert(all.end(), w->params.begin(), w->params.end());
    all.insert(all.end(), master_params_.begin(), master_params_.end());
    return all;
  }

  std::size_t num_parameters() { return count_entries(parameters()); }

  /// Full forward pass. Returns the cross-entropy over training nodes.
  double forward(bool training) {
    const Matrix<T>* fused = nullptr;
    if (fusion_) {
      fused_ = fusion_->forward(features_, cfg_.dropout, training, master_rng_);
      fused = &fused_;
    }
    // scatter
    pool_.run(workers_.size(), [&](std::size_t i) {
      const Matrix<T>& x = fused ? *fused : direct_inputs_[i];
      workers_[i]->forward(graph_.adj, norm_, x, cfg_.dropout, training);
    });
    // gather in device order
    std::vector<Matrix<T>> blocks;
    blocks.reserve(workers_.size());
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      const Matrix<T>& h = workers_[i]->outputs.back();
      blocks.push_back(encoding_ ? encoding_->forward(h, i) : h);
    }
    representation_ = concat_columns<T>(blocks);
    logits_ = classifier_.forward(representation_, cfg_.dropout, training, master_rng_);
    ce_ = softmax_cross_entropy(gather_rows(logits_, train_rows_), train_labels_);
    if (!std::isfinite(ce_.loss))
      throw NumericError("non-finite loss (" + std::to_string(ce_.loss) + ") for variant " +
                         std::string(variant_name(cfg_.variant)) + " with " +
                         std::to_string(workers_.size()) + " devices");
    return ce_.loss;
  }

  /// Gradients of the last forward's loss for every parameter. When `lr` is
  /// set, each owner applies its Adam step right after its backward.
  void backward(std::optional<double> lr = std::nullopt) {
    zero_grads(master_params_);
    Matrix<T> d_logits(logits_.rows(), logits_.cols());
    for (std::size_t k = 0; k < train_rows_.size(); ++k) {
      const auto src = ce_.grad.row(k);
      std::copy(src.begin(), src.end(), d_logits.row(train_rows_[k]).begin());
    }
    const Matrix<T> d_rep = classifier_.backward(std::move(d_logits), true);

    const std::size_t width = plan_.worker_hidden;
    std::vector<Matrix<T>> d_blocks;
    d_blocks.reserve(workers_.size());
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      d_blocks.push_back(column_block(d_rep, i * width, width));
      if (encoding_) encoding_->backward(d_blocks.back(), i);
    }

    const bool need_input_grad = fusion_.has_value();
    pool_.run(workers_.size(), [&](std::size_t i) {
      Worker<T>& w = *workers_[i];
      w.backward(graph_.adj, norm_, std::move(d_blocks[i]), need_input_grad);
      if (lr) adam_step(w.params, w.adam, *lr);
    });

    if (fusion_) {
      std::vector<Matrix<T>> device_grads;
      for (auto& w : workers_) device_grads.push_back(std::move(w->input_grad));
      fusion_->backward(device_grads);
    }
    if (lr) adam_step(master_params_, master_adam_, *lr);
  }

  /// Applies Adam to every parameter group using the current gradients.
  void step(double lr) {
    for (auto& w : workers_) adam_step(w->params, w->adam, lr);
    adam_step(master_params_, master_adam_, lr);
  }

  /// One training step; returns the training-mode loss.
  double train_step(double lr) {
    const double loss = forward(true);
    backward(lr);
    return loss;
  }

  EvalResult evaluate() {
    EvalResult r;
    r.loss = forward(false);
    const auto& labels = graph_.labels;
    const std::size_t c = graph_.num_classes;
    r.train_metric = slicegcn::evaluate(logits_, labels, train_rows_, c);
    r.val_metric = slicegcn::evaluate(logits_, labels, val_rows_, c);
    r.test_metric = slicegcn::evaluate(logits_, labels, test_rows_, c);
    r.train_acc = accuracy(logits_, labels, train_rows_);
    r.val_acc = accuracy(logits_, labels, val_rows_);
    r.test_acc = accuracy(logits_, labels, test_rows_);
    return r;
  }

  /// Concatenated, slice-encoded representation fed to the classifier by
  /// the last forward.
  const Matrix<T>& representation() const { return representation_; }
  const Matrix<T>& logits() const { return logits_; }

 private:
  const AttributedGraph& graph_;
  TrainConfig cfg_;
  ModelShape shape_;
  WidthPlan plan_;
  WorkerPool pool_;
  Rng master_rng_;
  std::vector<T> norm_;
  std::vector<std::uint32_t> train_rows_, val_rows_, test_rows_, train_labels_;

  std::vector<std::unique_ptr<Worker<T>>> workers_;
  std::optional<FeatureFusion<T>> fusion_;
  std::optional<SliceEncoding<T>> encoding_;
  Mlp<T> classifier_;
  ParamList<T> master_params_;
  AdamState<T> master_adam_;

  Matrix<T> features_;
  std::vector<Matrix<T>> direct_inputs_;
  Matrix<T> fused_;
  Matrix<T> representation_;
  Matrix<T> logits_;
  CrossEntropy<T> ce_;
};

namespace detail {

template <typename T>
RunResult run_training(const AttributedGraph& graph, const TrainConfig& cfg,
                       const std::function<void(const EpochReport&)>& on_epoch) {
  using Clock = std::chrono::steady_clock;
  Trainer<T> trainer(graph, cfg);
  RunResult result;
  RunSummary& s = result.summary;
  s.metric = std::string(metric_name(metric_for(graph.num_classes)));
  s.epochs = cfg.epochs;
  s.param_count = trainer.num_parameters();

  result.initial = trainer.evaluate();
  s.best_val_metric = result.initial.val_metric;
  s.best_epoch = 0;
  s.test_metric_at_best_val = result.initial.test_metric;
  s.test_accuracy_at_best_val = result.initial.test_acc;
  s.final_train_loss = result.initial.loss;
  s.final_test_metric = result.initial.test_metric;
  s.final_test_accuracy = result.initial.test_acc;

  double total_seconds = 0.0;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto t0 = Clock::now();
    EpochReport rep;
    rep.epoch = e + 1;
    rep.lr = cosine_lr(e, cfg.epochs, cfg.lr, cfg.lr_min);
    rep.train_loss = trainer.train_step(rep.lr);
    rep.eval = trainer.evaluate();
    const auto t1 = Clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    total_seconds += secs;
    rep.epoch_ms = secs * 1e3;

    if (rep.eval.val_metric > s.best_val_metric) {
      s.best_val_metric = rep.eval.val_metric;
      s.best_epoch = rep.epoch;
      s.test_metric_at_best_val = rep.eval.test_metric;
      s.test_accuracy_at_best_val = rep.eval.test_acc;
    }
    s.final_train_loss = rep.train_loss;
    s.final_test_metric = rep.eval.test_metric;
    s.final_test_accuracy = rep.eval.test_acc;
    if (on_epoch) on_epoch(rep);
    result.epochs.push_back(rep);
  }
  s.total_train_seconds = total_seconds;
  s.throughput_eps = total_seconds > 0.0 ? static_cast<double>(cfg.epochs) / total_seconds : 0.0;
  return result;
}

}  // namespace detail

/// Trains for cfg.epochs epochs with Adam under a cosine schedule,
/// evaluating after every epoch. The summary reports the test metric at the
/// epoch of the best validation metric.
inline RunResult train(const AttributedGraph& graph, const TrainConfig& cfg,
                       const std::function<void(const EpochReport&)>& on_epoch = {}) {
  if (cfg.precision == Precision::kF32) return detail::run_training<float>(graph, cfg, on_epoch);
  return detail::run_training<double>(graph, cfg, on_epoch);
}

}  // namespace slicegcn
