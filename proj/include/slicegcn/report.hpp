#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "slicegcn/engine.hpp"
#include "slicegcn/error.hpp"

namespace slicegcn {

inline constexpr int kArtifactSchemaVersion = 1;

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

/// Run configuration echo. The thread count is deliberately absent: it
/// never influences results.
inline nlohmann::json config_to_json(const TrainConfig& cfg, const std::string& dataset) {
  return {{"dataset", dataset},
          {"variant", variant_name(cfg.variant)},
          {"devices", cfg.variant == Variant::kBaseline ? std::size_t{1} : cfg.devices},
          {"epochs", cfg.epochs},
          {"hidden", cfg.hidden},
          {"layers", cfg.layers},
          {"classifier_layers", cfg.classifier_layers},
          {"lr", cfg.lr},
          {"lr_min", cfg.lr_min},
          {"dropout", cfg.dropout},
          {"slice_scale", cfg.slice_scale},
          {"seed", cfg.seed},
          {"precision", precision_name(cfg.precision)},
          {"layer_form", layer_form_name(cfg.form)},
          {"relu_over_sum", cfg.relu_over_sum}};
}

inline nlohmann::json summary_to_json(const RunSummary& s, bool include_timing) {
  nlohmann::json j = {{"metric", s.metric},
                      {"epochs", s.epochs},
                      {"param_count", s.param_count},
                      {"best_val_metric", s.best_val_metric},
                      {"best_epoch", s.best_epoch},
                      {"test_metric_at_best_val", s.test_metric_at_best_val},
                      {"test_accuracy_at_best_val", s.test_accuracy_at_best_val},
                      {"final_train_loss", s.final_train_loss},
                      {"final_test_metric", s.final_test_metric},
                      {"final_test_accuracy", s.final_test_accuracy}};
  if (include_timing) {
    j["total_train_seconds"] = s.total_train_seconds;
    j["throughput_eps"] = s.throughput_eps;
  }
  return j;
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  try {
    s.metric = j.at("metric").get<std::string>();
    s.epochs = j.at("epochs").get<std::size_t>();
    s.param_count = j.at("param_count").get<std::size_t>();
    s.best_val_metric = j.at("best_val_metric").get<double>();
    s.best_epoch = j.at("best_epoch").get<std::size_t>();
    s.test_metric_at_best_val = j.at("test_metric_at_best_val").get<double>();
    s.test_accuracy_at_best_val = j.at("test_accuracy_at_best_val").get<double>();
    s.final_train_loss = j.at("final_train_loss").get<double>();
    s.final_test_metric = j.at("final_test_metric").get<double>();
    s.final_test_accuracy = j.at("final_test_accuracy").get<double>();
    s.total_train_seconds = j.value("total_train_seconds", 0.0);
    s.throughput_eps = j.value("throughput_eps", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run summary: ") + e.what());
  }
  return s;
}

inline nlohmann::json eval_to_json(const EvalResult& r) {
  return {{"loss", r.loss},          {"train_metric", r.train_metric}, {"val_metric", r.val_metric},
          {"test_metric", r.test_metric}, {"train_acc", r.train_acc},  {"val_acc", r.val_acc},
          {"test_acc", r.test_acc}};
}

/// Everything that is a function of (data, config, seed). Byte-identical
/// across repeated runs and thread counts; wall-clock numbers live in the
/// timing artifact instead.
inline nlohmann::json metrics_artifact(const TrainConfig& cfg, const std::string& dataset,
                                       const RunResult& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    auto j = eval_to_json(e.eval);
    j["epoch"] = e.epoch;
    j["lr"] = e.lr;
    j["train_loss"] = e.train_loss;
    epochs.push_back(std::move(j));
  }
  return {{"schema_version", kArtifactSchemaVersion},
          {"config", config_to_json(cfg, dataset)},
          {"summary", summary_to_json(r.summary, false)},
          {"initial", eval_to_json(r.initial)},
          {"epochs", std::move(epochs)}};
}

inline nlohmann::json timing_artifact(const RunResult& r) {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& e : r.epochs) ms.push_back(e.epoch_ms);
  return {{"schema_version", kArtifactSchemaVersion},
          {"epochs", r.summary.epochs},
          {"total_train_seconds", r.summary.total_train_seconds},
          {"throughput_eps", r.summary.throughput_eps},
          {"epoch_ms", std::move(ms)}};
}

/// Per-epoch curve: epoch,lr,loss,val_metric
inline std::string epochs_csv(const RunResult& r) {
  std::string out = "epoch,lr,loss,val_metric\n";
  for (const auto& e : r.epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.lr) + "," +
           format_double(e.train_loss) + "," + format_double(e.eval.val_metric) + "\n";
  }
  return out;
}

/// Writes metrics.json, timing.json and epochs.csv into `dir`.
inline void write_artifacts(const std::filesystem::path& dir, const TrainConfig& cfg,
                            const std::string& dataset, const RunResult& r) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    out << text;
  };
  write("metrics.json", metrics_artifact(cfg, dataset, r).dump(2) + "\n");
  write("timing.json", timing_artifact(r).dump(2) + "\n");
  write("epochs.csv", epochs_csv(r));
}

}  // namespace slicegcn
