#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "slicegcn/engine.hpp"
#include "slicegcn/synth.hpp"

using namespace slicegcn;

namespace {

AttributedGraph small_graph(std::size_t n = 30, std::size_t features = 6, std::size_t classes = 3,
                            std::uint64_t seed = 5) {
  SynthParams sp;
  sp.num_nodes = n;
  sp.num_classes = classes;
  sp.num_features = features;
  sp.p_in = 0.3;
  sp.p_out = 0.05;
  sp.seed = seed;
  return synth_graph(sp);
}

AttributedGraph convergence_fixture(std::uint64_t seed) {
  SynthParams sp;  // n=400, 2 classes, p_in 0.05, p_out 0.005, signal 1
  sp.seed = seed;
  return synth_graph(sp);
}

TrainConfig base_config(Variant v, std::size_t p) {
  TrainConfig c;
  c.variant = v;
  c.devices = p;
  c.hidden = 8;
  c.layers = 2;
  c.epochs = 5;
  c.lr = 0.01;
  c.seed = 3;
  return c;
}

std::vector<Matrix<double>> snapshot(const ParamList<double>& params) {
  std::vector<Matrix<double>> out;
  for (const auto& p : params) out.push_back(*p.value);
  return out;
}

bool same_reports(const RunResult& a, const RunResult& b) {
  if (!(a.summary.best_val_metric == b.summary.best_val_metric) || a.epochs.size() != b.epochs.size())
    return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const auto &x = a.epochs[i], &y = b.epochs[i];
    if (x.train_loss != y.train_loss || x.lr != y.lr || x.eval.loss != y.eval.loss ||
        x.eval.val_metric != y.eval.val_metric || x.eval.test_metric != y.eval.test_metric)
      return false;
  }
  return true;
}

}  // namespace

TEST(WorkerPool, RunsEveryTaskOnce) {
  for (std::size_t threads : {0u, 1u, 3u}) {
    WorkerPool pool(threads);
    for (int round = 0; round < 5; ++round) {
      std::vector<std::atomic<int>> hits(7);
      pool.run(7, [&](std::size_t i) { ++hits[i]; });
      for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
  }
}

TEST(WorkerPool, RethrowsLowestIndexException) {
  for (std::size_t threads : {0u, 2u}) {
    WorkerPool pool(threads);
    try {
      pool.run(4, [](std::size_t i) {
        if (i >= 1) throw std::runtime_error("task " + std::to_string(i));
      });
      FAIL() << "expected exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "task 1");
    }
    // pool still usable afterwards
    int count = 0;
    pool.run(1, [&](std::size_t) { ++count; });
    EXPECT_EQ(count, 1);
  }
}

TEST(Trainer, BaselineHasOneFullWidthWorker) {
  const auto g = small_graph();
  auto cfg = base_config(Variant::kBaseline, 3);
  Trainer<double> t(g, cfg);
  EXPECT_EQ(t.devices(), 1u);
  EXPECT_EQ(t.worker(0).layers[0].in_width(), g.num_features() + 1);
  EXPECT_EQ(t.worker(0).layers[0].out_width(), cfg.hidden);
}

TEST(Trainer, FusionWidthsPerWorker) {
  const auto g = small_graph(30, 9, 3);
  auto cfg = base_config(Variant::kSliceFfse, 3);
  cfg.hidden = 10;
  Trainer<double> t(g, cfg);
  ASSERT_EQ(t.devices(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(t.worker(i).layers[0].in_width(), 4u);  // ceil(9/3) + 1
    EXPECT_EQ(t.worker(i).layers[1].out_width(), 4u);  // ceil(10/3)
  }
}

TEST(Trainer, RejectsMoreDevicesThanFeatures) {
  const auto g = small_graph(30, 4);
  EXPECT_THROW(Trainer<double>(g, base_config(Variant::kSlice, 5)), ConfigError);
}

TEST(Trainer, SameSeedSameInitialParameters) {
  const auto g = small_graph();
  const auto cfg = base_config(Variant::kSliceFfse, 2);
  Trainer<double> a(g, cfg), b(g, cfg);
  EXPECT_EQ(snapshot(a.parameters()), snapshot(b.parameters()));
  auto other = cfg;
  other.seed = 4;
  Trainer<double> c(g, other);
  EXPECT_NE(snapshot(a.parameters()), snapshot(c.parameters()));
}

TEST(Trainer, ParameterCountMatchesClosedForm) {
  const auto g = small_graph(30, 7, 3);
  for (Variant v : {Variant::kBaseline, Variant::kSlice, Variant::kSliceSe, Variant::kSliceFf,
                    Variant::kSliceFfse})
    for (std::size_t p : {1u, 2u, 3u}) {
      auto cfg = base_config(v, p);
      cfg.classifier_layers = 3;
      Trainer<double> t(g, cfg);
      EXPECT_EQ(t.num_parameters(), count_params(cfg.shape(g)).total()) << variant_name(v) << " " << p;
    }
}

TEST(Trainer, ZeroWeightsGiveUniformLoss) {
  const auto g = small_graph(30, 6, 4);
  Trainer<double> t(g, base_config(Variant::kSlice, 2));
  for (auto& p : t.parameters()) p.value->fill(0.0);
  EXPECT_NEAR(t.forward(true), std::log(4.0), 1e-15);
}

TEST(Trainer, ColumnBlocksAreIsolated) {
  const auto g = small_graph();
  auto cfg = base_config(Variant::kSliceFfse, 3);
  cfg.hidden = 9;
  Trainer<double> t(g, cfg);
  t.forward(false);
  const auto before = t.representation();
  for (auto& p : t.worker(1).params)
    for (auto& v : p.value->values()) v += 0.1;
  t.forward(false);
  const auto& after = t.representation();
  const std::size_t w = t.plan().worker_hidden;
  bool block_changed = false;
  for (std::size_t r = 0; r < before.rows(); ++r)
    for (std::size_t c = 0; c < before.cols(); ++c) {
      const bool in_block = c >= w && c < 2 * w;
      if (!in_block) EXPECT_EQ(before(r, c), after(r, c));
      else block_changed |= before(r, c) != after(r, c);
    }
  EXPECT_TRUE(block_changed);
}

// With the classifier rows of block 1 zeroed, worker 1 receives a zero
// gradient block and worker 0's gradient is the same whatever worker 1
// computes.
TEST(Trainer, WorkerGradientsDependOnlyOnTheirBlock) {
  const auto g = small_graph();
  auto cfg = base_config(Variant::kSlice, 2);
  cfg.dropout = 0.0;
  cfg.classifier_layers = 1;  // logits linear in the representation
  Trainer<double> b(g, cfg);
  auto& wb = b.classifier().layers()[0].weight;
  const std::size_t w = b.plan().worker_hidden;
  for (std::size_t r = w; r < 2 * w; ++r)
    for (auto& v : wb.row(r)) v = 0.0;
  b.forward(true);
  b.backward();
  Trainer<double> c(g, cfg);
  c.classifier().layers()[0].weight = wb;
  for (auto& p : c.worker(1).params) p.value->fill(0.0);
  c.forward(true);
  c.backward();
  for (std::size_t k = 0; k < b.worker(0).params.size(); ++k)
    EXPECT_EQ(*b.worker(0).params[k].grad, *c.worker(0).params[k].grad);
  for (const auto& p : b.worker(1).params)
    for (double v : p.grad->values()) EXPECT_EQ(v, 0.0);
}

TEST(Trainer, FullSystemGradientMatchesFiniteDifferences) {
  const auto g = small_graph(20, 6, 3, 9);
  auto cfg = base_config(Variant::kSliceFfse, 2);
  cfg.dropout = 0.0;
  cfg.hidden = 6;
  Trainer<double> t(g, cfg);
  // nonzero biases so every group carries signal
  Rng rng(77, 0);
  for (auto& p : t.parameters())
    if (p.name.ends_with("bias")) *p.value = oracle::random_matrix(1, p.value->cols(), rng, 0.1);
  t.forward(true);
  t.backward();
  const auto params = t.parameters();
  const auto errors = oracle::finite_difference_check(params, [&] { return t.forward(false); });
  EXPECT_EQ(errors.size(), 2u * 2u * 3u + 4u + 1u + 4u);
  for (const auto& e : errors) EXPECT_LE(e.rel_error, 1e-5) << e.name << " norm " << e.norm;
}

TEST(Train, EpochsZeroGivesInitialEvaluationOnly) {
  const auto g = small_graph();
  auto cfg = base_config(Variant::kSlice, 2);
  cfg.epochs = 0;
  const auto r = train(g, cfg);
  EXPECT_TRUE(r.epochs.empty());
  EXPECT_EQ(r.summary.best_epoch, 0u);
  EXPECT_EQ(r.summary.best_val_metric, r.initial.val_metric);
  EXPECT_EQ(r.summary.throughput_eps, 0.0);
}

TEST(Train, ZeroLearningRateFreezesParameters) {
  const auto g = small_graph();
  auto cfg = base_config(Variant::kSliceFfse, 2);
  cfg.lr = 0.0;
  cfg.dropout = 0.0;
  const auto r = train(g, cfg);
  for (const auto& e : r.epochs) {
    EXPECT_EQ(e.train_loss, r.epochs.front().train_loss);
    EXPECT_EQ(e.eval.loss, r.initial.loss);
  }
}

TEST(Train, DegenerateSliceMatchesBaseline) {
  const auto g = convergence_fixture(1);
  auto base = base_config(Variant::kBaseline, 1);
  base.epochs = 50;
  base.hidden = 16;
  auto slice = base;
  slice.variant = Variant::kSlice;
  const auto a = train(g, base);
  const auto b = train(g, slice);
  ASSERT_EQ(a.epochs.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_LE(std::abs(a.epochs[i].train_loss - b.epochs[i].train_loss), 1e-10);
}

TEST(Train, ThreadCountDoesNotChangeResults) {
  const auto g = small_graph(60, 9, 3);
  auto cfg = base_config(Variant::kSliceFfse, 3);
  cfg.threads = 0;
  const auto seq = train(g, cfg);
  for (std::size_t threads : {1u, 2u, 3u, 5u}) {
    cfg.threads = threads;
    EXPECT_TRUE(same_reports(seq, train(g, cfg))) << threads << " threads";
  }
}

TEST(Train, LossDecreasesForEveryVariant) {
  const auto g = convergence_fixture(2);
  for (Variant v : {Variant::kBaseline, Variant::kSlice, Variant::kSliceSe, Variant::kSliceFf,
                    Variant::kSliceFfse}) {
    auto cfg = base_config(v, 2);
    cfg.epochs = 10;
    cfg.hidden = 16;
    const auto r = train(g, cfg);
    EXPECT_LT(r.epochs.back().eval.loss, r.initial.loss) << variant_name(v);
  }
}

TEST(Train, Float32RunsAndStaysFinite) {
  const auto g = small_graph();
  auto cfg = base_config(Variant::kSliceFfse, 2);
  cfg.precision = Precision::kF32;
  const auto r = train(g, cfg);
  for (const auto& e : r.epochs) EXPECT_TRUE(std::isfinite(e.train_loss));
}

TEST(Train, BestValTracksStrictImprovements) {
  const auto g = small_graph(80, 6, 3);
  auto cfg = base_config(Variant::kSlice, 2);
  cfg.epochs = 20;
  const auto r = train(g, cfg);
  double best = r.initial.val_metric;
  std::size_t best_epoch = 0;
  double test_at = r.initial.test_metric;
  for (const auto& e : r.epochs)
    if (e.eval.val_metric > best) {
      best = e.eval.val_metric;
      best_epoch = e.epoch;
      test_at = e.eval.test_metric;
    }
  EXPECT_EQ(r.summary.best_val_metric, best);
  EXPECT_EQ(r.summary.best_epoch, best_epoch);
  EXPECT_EQ(r.summary.test_metric_at_best_val, test_at);
}
