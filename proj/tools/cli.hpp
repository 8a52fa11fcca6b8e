#pragma once

// Command-line front end: train, bench, validate-dataset, synth.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <algorithm>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slicegcn/slicegcn.hpp"

namespace slicegcn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

struct GraphOptions {
  std::string dataset = "synth";
  bool keep_direction = false;
  bool self_loops = false;
  SynthParams synth;
  double synth_degree = 0.0;  // > 0 derives p_in / p_out from this average degree
  double synth_homophily = 0.8;
};

struct RunOptions {
  GraphOptions graph;
  TrainConfig train;
  std::string variant = "slice";
  std::string precision = "f64";
  std::string layer_form = "agg_self";
  std::size_t threads = 0;
  bool threads_set = false;
  std::string out;
};

inline void add_graph_options(CLI::App& app, GraphOptions& g) {
  app.add_option("--dataset", g.dataset, "Dataset directory, or 'synth' for a planted-partition graph")
      ->capture_default_str();
  app.add_flag("--keep-direction", g.keep_direction,
               "Keep directed edges (in-neighborhoods) instead of symmetrizing");
  app.add_flag("--self-loops", g.self_loops, "Add a self-loop to every node");
  app.add_option("--synth-nodes", g.synth.num_nodes, "Synthetic graph: node count")
      ->capture_default_str()->check(CLI::Range(std::size_t{2}, std::size_t{UINT32_MAX}));
  app.add_option("--synth-classes", g.synth.num_classes, "Synthetic graph: class count")
      ->capture_default_str()->check(CLI::Range(2, 1 << 20));
  app.add_option("--synth-features", g.synth.num_features, "Synthetic graph: feature dimension")
      ->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
  app.add_option("--synth-p-in", g.synth.p_in, "Synthetic graph: intra-class edge probability")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--synth-p-out", g.synth.p_out, "Synthetic graph: inter-class edge probability")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--synth-degree", g.synth_degree,
                 "Synthetic graph: target average degree (overrides --synth-p-in/--synth-p-out)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--synth-homophily", g.synth_homophily,
                 "Synthetic graph: intra-class share of the degree when --synth-degree is set")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--synth-signal", g.synth.signal, "Synthetic graph: class signal strength")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--graph-seed", g.synth.seed, "Synthetic graph: generator seed")->capture_default_str();
}

inline void add_run_options(CLI::App& app, RunOptions& o) {
  add_graph_options(app, o.graph);
  app.add_option("--variant", o.variant, "baseline | slice | slice_se | slice_ff | slice_ffse")
      ->capture_default_str()
      ->check(CLI::IsMember({"baseline", "slice", "slice_se", "slice_ff", "slice_ffse"}));
  app.add_option("-p,--devices", o.train.devices, "Number of simulated devices")
      ->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  app.add_option("--epochs", o.train.epochs, "Training epochs")->capture_default_str();
  app.add_option("--hidden", o.train.hidden, "Total hidden width (split across devices)")
      ->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
  app.add_option("--layers", o.train.layers, "GCN layers per device")
      ->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 10));
  app.add_option("--classifier-layers", o.train.classifier_layers, "Classifier MLP depth")
      ->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 10));
  app.add_option("--lr", o.train.lr, "Initial learning rate (cosine-annealed to --lr-min)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--lr-min", o.train.lr_min, "Final learning rate")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--dropout", o.train.dropout, "Dropout rate in [0, 1)")
      ->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  app.add_option("--slice-scale", o.train.slice_scale, "Slice size scaling factor")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", o.train.seed, "Model seed")->capture_default_str();
  app.add_option("--precision", o.precision, "f32 | f64")
      ->capture_default_str()->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--layer-form", o.layer_form, "agg (aggregation only) | agg_self (aggregation + self path)")
      ->capture_default_str()->check(CLI::IsMember({"agg", "agg_self"}));
  app.add_flag("--relu-over-sum", o.train.relu_over_sum,
               "Apply the ReLU to aggregation + self path instead of aggregation only");
  app.add_option("--threads", o.threads, "Worker threads (default: one per device, 0 = sequential)")
      ->each([&o](const std::string&) { o.threads_set = true; });
  app.add_option("--out", o.out, "Output directory for artifacts");
}

/// Turns parsed strings into enums and fills derived fields.
inline void finalize(RunOptions& o) {
  o.train.variant = *parse_variant(o.variant);
  o.train.precision = o.precision == "f32" ? Precision::kF32 : Precision::kF64;
  o.train.form = *parse_layer_form(o.layer_form);
  if (o.threads_set) o.train.threads = o.threads;
  if (o.train.variant == Variant::kBaseline) o.train.devices = 1;
}

inline AttributedGraph load_graph(GraphOptions g) {
  if (g.dataset == "synth") {
    if (g.synth_degree > 0.0) {
      const double n = static_cast<double>(g.synth.num_nodes);
      const double block = n / static_cast<double>(g.synth.num_classes);
      g.synth.p_in = std::min(1.0, g.synth_degree * g.synth_homophily / std::max(1.0, block - 1.0));
      g.synth.p_out = std::min(1.0, g.synth_degree * (1.0 - g.synth_homophily) / std::max(1.0, n - block));
    }
    return synth_graph(g.synth);
  }
  return load_dataset(g.dataset, {g.keep_direction, g.self_loops});
}

inline std::string dataset_label(const GraphOptions& g) {
  if (g.dataset != "synth") return g.dataset;
  std::ostringstream s;
  s << "synth(n=" << g.synth.num_nodes << ",classes=" << g.synth.num_classes
    << ",features=" << g.synth.num_features << ",seed=" << g.synth.seed << ")";
  return s.str();
}

inline void print_stats(std::ostream& out, const std::string& name, const AttributedGraph& g) {
  out << "Dataset | #Nodes | #Edges | #Features | #Classes\n";
  out << name << " | " << g.num_nodes() << " | " << g.adj.num_edges() << " | " << g.num_features()
      << " | " << g.num_classes << "\n";
  out << "splits: train=" << g.nodes_in(Split::kTrain).size()
      << " val=" << g.nodes_in(Split::kVal).size() << " test=" << g.nodes_in(Split::kTest).size()
      << (g.adj.symmetric() ? "" : " (directed)") << "\n";
}

// ---------------------------------------------------------------------------

inline int cmd_train(RunOptions o, std::ostream& out) {
  finalize(o);
  const AttributedGraph graph = load_graph(o.graph);
  const std::string label = dataset_label(o.graph);
  log(LogLevel::kInfo, "training " + std::string(variant_name(o.train.variant)) + " with " +
                           std::to_string(o.train.devices) + " device(s) on " + label);
  const RunResult r = train(graph, o.train, [](const EpochReport& e) {
    log(LogLevel::kDebug, "epoch " + std::to_string(e.epoch) + " lr=" + format_double(e.lr) +
                              " loss=" + format_double(e.train_loss) +
                              " val=" + format_double(e.eval.val_metric));
  });
  const RunSummary& s = r.summary;
  out << "variant=" << variant_name(o.train.variant) << " p=" << o.train.devices
      << " params=" << s.param_count << " best_val_" << s.metric << "=" << s.best_val_metric
      << " (epoch " << s.best_epoch << ") test_" << s.metric << "_at_best_val="
      << s.test_metric_at_best_val << " throughput=" << s.throughput_eps << " epochs/s\n";
  if (!o.out.empty()) {
    write_artifacts(o.out, o.train, label, r);
    out << "artifacts written to " << o.out << "\n";
  }
  return kExitOk;
}

struct BenchCell {
  Variant variant = Variant::kBaseline;
  std::size_t devices = 1;
};

inline BenchCell parse_cell(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const auto v = parse_variant(name);
  if (!v) throw ConfigError("unknown variant in bench cell '" + text + "'");
  BenchCell c{*v, 1};
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      const long p = std::stol(text.substr(colon + 1), &used);
      if (p < 1 || used != text.size() - colon - 1) throw std::invalid_argument("p");
      c.devices = static_cast<std::size_t>(p);
    } catch (const std::exception&) {
      throw ConfigError("bad device count in bench cell '" + text + "'");
    }
  }
  if (c.variant == Variant::kBaseline) c.devices = 1;
  return c;
}

struct BenchRow {
  BenchCell cell;
  RunSummary summary;
};

inline std::string method_label(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "GCN";
    case Variant::kSlice: return "SliceGCN";
    case Variant::kSliceSe: return "-SE";
    case Variant::kSliceFf: return "-FF";
    case Variant::kSliceFfse: return "-FFSE";
  }
  return "?";
}

/// Comparison table laid out like a per-dataset results block: baseline row
/// first, then one column group per device count with metric, throughput
/// and throughput relative to the baseline.
inline void print_bench(std::ostream& out, const std::string& dataset,
                        const std::vector<BenchRow>& rows) {
  const BenchRow* base = nullptr;
  std::vector<std::size_t> ps;
  std::vector<Variant> variants;
  for (const auto& r : rows) {
    if (r.cell.variant == Variant::kBaseline) {
      if (!base) base = &r;
      continue;
    }
    if (std::find(ps.begin(), ps.end(), r.cell.devices) == ps.end()) ps.push_back(r.cell.devices);
    if (std::find(variants.begin(), variants.end(), r.cell.variant) == variants.end())
      variants.push_back(r.cell.variant);
  }
  std::sort(ps.begin(), ps.end());
  const std::string metric = rows.front().summary.metric;

  out << "Dataset: " << dataset << "\n";
  out << std::left << std::setw(10) << "Method" << std::right << std::setw(4) << "p" << std::setw(12)
      << metric << std::setw(14) << "epochs/s" << std::setw(12) << "params" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(10) << method_label(r.cell.variant) << std::right << std::setw(4)
        << r.cell.devices << std::setw(12) << std::fixed << std::setprecision(4)
        << r.summary.test_metric_at_best_val << std::setw(14) << std::setprecision(3)
        << r.summary.throughput_eps << std::setw(12) << r.summary.param_count << "\n";
  }
  out.unsetf(std::ios::floatfield);

  // grid: rows = method, column groups = device count
  out << "\n" << std::left << std::setw(10) << "Method";
  for (std::size_t p : ps) out << " | p=" << std::setw(3) << p << std::setw(27) << " metric  epochs/s  ratio";
  out << "\n";
  auto cell_text = [&](const RunSummary& s) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(4) << s.test_metric_at_best_val << "  " << std::setprecision(3)
      << s.throughput_eps << "  ";
    if (base && base->summary.throughput_eps > 0)
      c << std::setprecision(3) << s.throughput_eps / base->summary.throughput_eps;
    else
      c << "-";
    return c.str();
  };
  if (base) out << std::left << std::setw(10) << "GCN" << " | " << cell_text(base->summary) << "\n";
  for (Variant v : variants) {
    out << std::left << std::setw(10) << method_label(v);
    for (std::size_t p : ps) {
      const BenchRow* hit = nullptr;
      for (const auto& r : rows)
        if (r.cell.variant == v && r.cell.devices == p) hit = &r;
      out << " | " << std::setw(31) << (hit ? cell_text(hit->summary) : std::string("-"));
    }
    out << "\n";
  }
}

inline int cmd_bench(RunOptions o, const std::vector<std::string>& cells, std::ostream& out) {
  if (cells.empty()) throw ConfigError("bench: no cells given");
  std::vector<BenchCell> parsed;
  for (const auto& c : cells) parsed.push_back(parse_cell(c));
  finalize(o);
  const AttributedGraph graph = load_graph(o.graph);
  const std::string label = dataset_label(o.graph);

  std::vector<BenchRow> rows;
  nlohmann::json report = nlohmann::json::array();
  for (const BenchCell& c : parsed) {
    TrainConfig cfg = o.train;
    cfg.variant = c.variant;
    cfg.devices = c.devices;
    if (!o.threads_set) cfg.threads.reset();
    log(LogLevel::kInfo, "bench cell " + std::string(variant_name(c.variant)) + " p=" +
                             std::to_string(c.devices));
    const RunResult r = train(graph, cfg);
    rows.push_back({c, r.summary});
    nlohmann::json j = summary_to_json(r.summary, true);
    j["variant"] = variant_name(c.variant);
    j["devices"] = c.devices;
    report.push_back(std::move(j));
  }
  print_bench(out, label, rows);
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    std::ofstream(std::filesystem::path(o.out) / "bench.json")
        << nlohmann::json{{"schema_version", kArtifactSchemaVersion},
                          {"dataset", label},
                          {"cells", report}}
               .dump(2)
        << "\n";
  }
  return kExitOk;
}

inline int cmd_validate(const std::string& path, const GraphOptions& g, std::ostream& out) {
  const AttributedGraph graph = load_dataset(path, {g.keep_direction, g.self_loops});
  auto name = std::filesystem::path(path).lexically_normal();
  if (name.filename().empty()) name = name.parent_path();
  print_stats(out, name.filename().string(), graph);
  return kExitOk;
}

inline int cmd_synth(GraphOptions g, const std::string& dir, std::ostream& out) {
  g.dataset = "synth";
  const AttributedGraph graph = load_graph(g);
  save_dataset(graph, dir);
  print_stats(out, dataset_label(g), graph);
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Reads a run spec: one `key = value` per line, '#' starts a comment, keys
/// are long flag names of `cmd` with or without the leading dashes
/// (underscores are accepted for dashes). Returns the equivalent arguments.
inline std::vector<std::string> read_run_spec(const std::string& path, const CLI::App& cmd) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read run spec " + path);
  std::vector<std::string> args;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r");
      const auto e = t.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    std::replace(key.begin(), key.end(), '_', '-');
    const CLI::Option* opt = key.size() > 1 ? cmd.get_option_no_throw("--" + key) : nullptr;
    if (!opt || key == "config" || key == "help")
      throw ConfigError(where + ": unknown key '" + key + "'");
    if (opt->get_expected_min() == 0) {  // flag
      if (value == "true" || value == "1") args.push_back("--" + key);
      else if (value != "false" && value != "0")
        throw ConfigError(where + ": '" + key + "' expects true or false");
    } else {
      args.push_back("--" + key);
      args.push_back(value);
    }
  }
  return args;
}

struct Commands {
  RunOptions train_opts;
  std::string config_path;
  RunOptions bench_opts;
  std::vector<std::string> cells;
  GraphOptions validate_opts;
  std::string validate_path;
  GraphOptions synth_opts;
  std::string synth_out;
  CLI::App* train = nullptr;
  CLI::App* bench = nullptr;
  CLI::App* validate = nullptr;
  CLI::App* synth = nullptr;
};

inline void build_app(CLI::App& app, Commands& c) {
  app.require_subcommand(1);
  // a repeated option keeps its last value, so the command line overrides a run spec
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  c.train = app.add_subcommand("train", "Train one configuration and write artifacts");
  add_run_options(*c.train, c.train_opts);
  c.train->add_option("--config", c.config_path,
                      "Run spec file: 'key = value' per line, keys are flag names; flags given "
                      "on the command line take precedence");

  c.bench_opts.precision = "f32";
  c.bench_opts.train.epochs = 5;
  c.bench = app.add_subcommand("bench", "Throughput/accuracy comparison over (variant, p) cells");
  add_run_options(*c.bench, c.bench_opts);
  c.bench->add_option("--cells", c.cells, "Comma-separated cells, each VARIANT[:P], e.g. baseline,slice:2")
      ->required()->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  c.validate = app.add_subcommand("validate-dataset", "Load a dataset directory and print statistics");
  c.validate->add_option("path", c.validate_path, "Dataset directory")->required();
  c.validate->add_flag("--keep-direction", c.validate_opts.keep_direction, "Keep directed edges");
  c.validate->add_flag("--self-loops", c.validate_opts.self_loops, "Add self-loops");

  c.synth = app.add_subcommand("synth", "Write a planted-partition dataset directory");
  add_graph_options(*c.synth, c.synth_opts);
  c.synth->add_option("--out", c.synth_out, "Output directory")->required();
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  const std::string description = "Feature-sliced parallel GCN training";
  auto app = std::make_unique<CLI::App>(description);
  auto cmds = std::make_unique<Commands>();
  build_app(*app, *cmds);

  try {
    try {
      app->parse(argc, argv);
      if (*cmds->train && !cmds->config_path.empty()) {
        // re-parse with the spec's arguments ahead of the real ones
        std::vector<std::string> args{"train"};
        for (auto& a : read_run_spec(cmds->config_path, *cmds->train)) args.push_back(std::move(a));
        bool in_train = false;
        for (int i = 1; i < argc; ++i) {
          if (in_train) args.emplace_back(argv[i]);
          else in_train = std::string(argv[i]) == "train";
        }
        app = std::make_unique<CLI::App>(description);
        cmds = std::make_unique<Commands>();
        build_app(*app, *cmds);
        std::reverse(args.begin(), args.end());
        app->parse(args);
      }
    } catch (const CLI::ParseError& e) {
      const int code = app->exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }

    if (*cmds->train) return cmd_train(cmds->train_opts, out);
    if (*cmds->bench) return cmd_bench(cmds->bench_opts, cmds->cells, out);
    if (*cmds->validate) return cmd_validate(cmds->validate_path, cmds->validate_opts, out);
    if (*cmds->synth) return cmd_synth(cmds->synth_opts, cmds->synth_out, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace slicegcn::cli
