#include "energuard/engine/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "energuard/baselines.hpp"
#include "energuard/engine/bench.hpp"
#include "energuard/engine/monitor.hpp"
#include "energuard/errors.hpp"
#include "energuard/metrics.hpp"
#include "energuard/models.hpp"
#include "energuard/nn/serialize.hpp"
#include "energuard/sensor.hpp"
#include "energuard/traceio.hpp"

namespace energuard::engine {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

struct SourceOptions {
  std::string source = "live";
  std::string replay_file;
  bool loop = false;
  std::string generator = "benign-noise";
  int variant = -1;
  std::uint64_t seed = 0;
  std::string domain = "pp0";
  int package = 0;
  fs::path powercap_root = sensor::default_powercap_root();
};

void add_source_options(CLI::App* cmd, SourceOptions& opts, const char* default_source) {
  opts.source = default_source;
  cmd->add_option("--source", opts.source, "Trace source: live, replay, or synthetic")
      ->check(CLI::IsMember({"live", "replay", "synthetic"}))
      ->capture_default_str();
  cmd->add_option("--replay", opts.replay_file, "Trace CSV to replay (replay source)");
  cmd->add_flag("--loop", opts.loop, "Loop the replay file when exhausted");
  cmd->add_option("--generator", opts.generator,
                  "Synthetic generator: benign-noise or attack-burst")
      ->capture_default_str();
  cmd->add_option("--variant", opts.variant,
                  "Synthetic attack variant 0..14 (overrides --generator)");
  cmd->add_option("--seed", opts.seed, "Synthetic generator seed")->capture_default_str();
  cmd->add_option("--domain", opts.domain, "Power domain: package, pp0, pp1, dram")
      ->check(CLI::IsMember({"package", "pp0", "pp1", "dram"}))
      ->capture_default_str();
  cmd->add_option("--package", opts.package, "RAPL package index for live sampling")
      ->capture_default_str();
  cmd->add_option("--powercap-root", opts.powercap_root,
                  "Powercap root directory (env ENERGUARD_POWERCAP_ROOT)")
      ->capture_default_str();
}

sensor::RaplZone resolve_zone(const SourceOptions& opts) {
  const auto domain = power_domain_from_string(opts.domain);
  const auto zones = sensor::discover_zones(opts.powercap_root);
  if (zones.empty()) {
    throw IoError("no RAPL zones found under " + opts.powercap_root.string());
  }
  const auto zone = sensor::find_zone(zones, *domain, opts.package);
  if (!zone) {
    throw IoError("no " + opts.domain + " zone on package " + std::to_string(opts.package) +
                  " under " + opts.powercap_root.string());
  }
  return *zone;
}

std::unique_ptr<sensor::SampleSource> make_source(const SourceOptions& opts) {
  if (opts.source == "live") {
    return std::make_unique<sensor::LiveSource>(resolve_zone(opts));
  }
  if (opts.source == "replay") {
    if (opts.replay_file.empty()) throw Error("--replay is required for a replay source");
    return std::make_unique<sensor::ReplaySource>(opts.replay_file, opts.loop);
  }
  const sensor::SyntheticSpec spec = opts.variant >= 0 ? sensor::attack_variant(opts.variant)
                                                       : sensor::parse_generator(opts.generator);
  return std::make_unique<sensor::SyntheticSource>(spec, opts.seed);
}

// --- collect ---

struct CollectArgs {
  SourceOptions source;
  fs::path out;
  std::string family = "benign";
  std::string label;
  std::uint64_t interval_us = 500;
  std::size_t samples = 3000;
  std::size_t measurements = 50;
  std::uint64_t sleep_ms = 1000;
  std::string start_hook;
  std::string stop_hook;
};

int run_collect(const CollectArgs& args) {
  const traceio::ClassLabel label = args.family == "attack" ? traceio::attack_label(args.label)
                                                            : traceio::benign_label(args.label);
  sensor::CollectorConfig config;
  config.interval_us = args.interval_us;
  config.samples_per_trace = args.samples;
  config.measurements = args.measurements;
  config.inter_measurement_sleep = std::chrono::milliseconds(args.sleep_ms);
  if (auto d = power_domain_from_string(args.source.domain)) config.domain = *d;

  const fs::path dir = args.out / args.family / args.label;
  fs::create_directories(dir);
  std::size_t existing = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") ++existing;
  }

  auto source = make_source(args.source);
  sensor::collect_campaign(*source, config, label, args.start_hook, args.stop_hook,
                           [&](std::size_t measurement, traceio::EnergyTrace trace) {
                             char name[32];
                             std::snprintf(name, sizeof(name), "trace_%03zu.csv",
                                           existing + measurement - 1);
                             traceio::write_trace(trace, dir / name);
                             std::fprintf(stderr, "recorded %s (mean period %.1f us)\n",
                                          (dir / name).c_str(),
                                          trace.meta.achieved_period_us);
                           });
  std::printf("collected %zu traces into %s\n", args.measurements, dir.c_str());
  return 0;
}

// --- train ---

struct TrainArgs {
  std::string task;  // ad | ar
  std::string algo = "cnn";
  fs::path data;
  fs::path out;
  fs::path history;
  fs::path report;
  fs::path standardizer_out;
  std::size_t samples = 3000;
  int train_per_class = 40;
  int val_per_class = 10;
  std::uint64_t split_seed = 0;
  std::uint64_t seed = 0;
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::size_t patience = 10;
  double learning_rate = 1e-3;
  double threshold = 0.5;
  int knn_k = 0;  // 0: task default (ad 3, ar 2)
  double minkowski_p = 2.0;
  int rf_trees = 100;
  int rf_depth = 14;
  bool verbose = false;
};

baselines::FeatureMatrix feature_matrix(const traceio::Dataset& ds) {
  baselines::FeatureMatrix m;
  m.rows = ds.traces.size();
  m.cols = ds.traces.empty() ? 0 : ds.traces.front().deltas.size();
  m.values.reserve(m.rows * m.cols);
  for (const auto& t : ds.traces) {
    m.values.insert(m.values.end(), t.deltas.begin(), t.deltas.end());
  }
  return m;
}

void print_report(const metrics::EvalReport& report, const fs::path& json_out) {
  std::cout << report.to_text();
  if (!json_out.empty()) metrics::write_report(report, json_out);
}

int run_train(const TrainArgs& args) {
  traceio::Dataset raw = traceio::load_dataset(args.data);
  traceio::Dataset cut = traceio::truncate(raw, args.samples);
  if (args.task == "ar") cut = models::attacks_only(cut);
  if (cut.traces.empty()) throw EmptyDataset("no traces left for task " + args.task);

  const traceio::SplitSpec split_spec{args.train_per_class, args.val_per_class, args.split_seed};
  auto [train_raw, val_raw] = traceio::split(cut, split_spec);

  std::vector<std::string> class_names;
  if (args.task == "ad") {
    class_names = {"benign", "anomaly"};
  } else {
    class_names.assign(traceio::attack_names().begin(), traceio::attack_names().end());
  }

  if (args.algo == "cnn") {
    models::TrainConfig config;
    config.n_samples = args.samples;
    config.fit.max_epochs = args.epochs;
    config.fit.batch_size = args.batch;
    config.fit.patience = args.patience;
    config.fit.learning_rate = args.learning_rate;
    config.fit.seed = args.seed;
    config.fit.verbose = args.verbose;

    const traceio::Standardizer s = traceio::fit_standardizer(train_raw);
    const traceio::Dataset train_std = traceio::apply(s, train_raw);
    const traceio::Dataset val_std = traceio::apply(s, val_raw);
    models::TrainOutput out = args.task == "ad"
                                  ? models::train_ad(train_std, val_std, s, config)
                                  : models::train_ar(train_std, val_std, s, config);

    models::save_model(out.model, args.out);
    if (!args.history.empty()) models::write_history_csv(out.fit, args.history);
    if (!args.standardizer_out.empty()) traceio::save_standardizer(s, args.standardizer_out);
    std::fprintf(stderr, "best epoch %zu, best val accuracy %.4f\n", out.fit.best_epoch,
                 out.fit.best_val_accuracy);

    const metrics::EvalReport report =
        args.task == "ad" ? models::evaluate_ad(out.model, val_raw, args.threshold, "ad-cnn")
                          : models::evaluate_ar(out.model, val_raw, "ar-cnn");
    print_report(report, args.report);
    return 0;
  }

  // Baselines consume raw (unstandardized) truncated traces; both KNN and
  // the forest are invariant to the pooled affine scaling anyway.
  const baselines::FeatureMatrix train_x = feature_matrix(train_raw);
  const std::vector<int> train_y =
      args.task == "ad" ? models::ad_labels(train_raw) : models::ar_labels(train_raw);
  const std::vector<int> val_y =
      args.task == "ad" ? models::ad_labels(val_raw) : models::ar_labels(val_raw);
  const std::size_t k_classes = args.task == "ad" ? 2 : traceio::attack_names().size();

  std::vector<int> predicted;
  std::vector<double> scores;
  const std::string model_id = args.task + "-" + args.algo;

  if (args.algo == "knn") {
    const int k = args.knn_k > 0 ? args.knn_k : (args.task == "ad" ? 3 : 2);
    baselines::KnnModel model(train_x, train_y, k_classes, k, args.minkowski_p);
    model.save(args.out, args.task, class_names);
    for (const auto& t : val_raw.traces) {
      const auto pred = model.predict(t.deltas);
      scores.push_back(pred.scores.size() > 1 ? pred.scores[1] : 0.0);
      predicted.push_back(args.task == "ad" ? (scores.back() >= args.threshold ? 1 : 0)
                                            : pred.label);
    }
  } else if (args.algo == "rf") {
    baselines::RandomForestConfig config{args.rf_trees, args.rf_depth, args.seed};
    auto model = baselines::RandomForestModel::fit(train_x, train_y, k_classes, config);
    model.save(args.out, args.task, class_names);
    for (const auto& t : val_raw.traces) {
      const auto pred = model.predict(t.deltas);
      scores.push_back(pred.scores.size() > 1 ? pred.scores[1] : 0.0);
      predicted.push_back(args.task == "ad" ? (scores.back() >= args.threshold ? 1 : 0)
                                            : pred.label);
    }
  } else {
    throw Error("unknown algorithm " + args.algo);
  }

  const metrics::EvalReport report =
      metrics::build_report(val_y, predicted, args.task == "ad" ? scores : std::vector<double>{},
                            k_classes, class_names, model_id, args.samples);
  print_report(report, args.report);
  return 0;
}

// --- evaluate ---

struct EvaluateArgs {
  fs::path model;
  fs::path data;
  fs::path report;
  fs::path confusion;
  double threshold = 0.5;
};

int run_evaluate(const EvaluateArgs& args) {
  const nn::ModelFile file = nn::read_model_file(args.model);
  const std::string kind = file.header.value("kind", "");
  const std::string task = file.header.value("task", "");

  traceio::Dataset raw = traceio::load_dataset(args.data);
  metrics::EvalReport report;

  if (kind == "cnn") {
    models::TrainedModel model = models::load_model(args.model);
    raw = traceio::truncate(raw, model.net.input_length());
    report = task == "ar" ? models::evaluate_ar(model, raw, "ar-cnn")
                          : models::evaluate_ad(model, raw, args.threshold, "ad-cnn");
  } else {
    std::vector<std::string> class_names;
    std::vector<int> predicted;
    std::vector<double> scores;
    traceio::Dataset eval_set;
    std::size_t k_classes = 2;
    std::size_t n_features = 0;

    if (kind == "knn") {
      std::string model_task;
      const auto model = baselines::KnnModel::load(args.model, &model_task, &class_names);
      n_features = file.header.at("cols").get<std::size_t>();
      eval_set = traceio::truncate(task == "ar" ? models::attacks_only(raw) : raw, n_features);
      k_classes = model.num_classes();
      for (const auto& t : eval_set.traces) {
        const auto pred = model.predict(t.deltas);
        scores.push_back(pred.scores.size() > 1 ? pred.scores[1] : 0.0);
        predicted.push_back(task == "ad" ? (scores.back() >= args.threshold ? 1 : 0) : pred.label);
      }
    } else if (kind == "rf") {
      std::string model_task;
      const auto model = baselines::RandomForestModel::load(args.model, &model_task, &class_names);
      n_features = file.header.at("num_features").get<std::size_t>();
      eval_set = traceio::truncate(task == "ar" ? models::attacks_only(raw) : raw, n_features);
      k_classes = model.num_classes();
      for (const auto& t : eval_set.traces) {
        const auto pred = model.predict(t.deltas);
        scores.push_back(pred.scores.size() > 1 ? pred.scores[1] : 0.0);
        predicted.push_back(task == "ad" ? (scores.back() >= args.threshold ? 1 : 0) : pred.label);
      }
    } else {
      throw CorruptModel("unknown model kind '" + kind + "'");
    }

    const std::vector<int> truth =
        task == "ad" ? models::ad_labels(eval_set) : models::ar_labels(eval_set);
    report = metrics::build_report(truth, predicted,
                                   task == "ad" ? scores : std::vector<double>{}, k_classes,
                                   class_names, task + "-" + kind, n_features);
  }

  print_report(report, args.report);
  if (!args.confusion.empty()) {
    std::ofstream f(args.confusion, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + args.confusion.string());
    f << report.confusion.to_csv();
  }
  return 0;
}

// --- monitor ---

struct MonitorArgs {
  SourceOptions source;
  MonitorConfig config;
  std::uint64_t windows = 0;
};

int run_monitor_cmd(MonitorArgs& args) {
  args.config.max_windows = args.windows;
  args.config.stop = &g_stop;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  auto source = make_source(args.source);
  const MonitorStats stats = run_monitor(args.config, *source);
  std::fprintf(stderr,
               "monitor done: %llu windows, %llu anomalies, %llu recognizer calls, "
               "%llu dropped, %llu sampling errors\n",
               static_cast<unsigned long long>(stats.windows),
               static_cast<unsigned long long>(stats.anomalies),
               static_cast<unsigned long long>(stats.ar_invocations),
               static_cast<unsigned long long>(stats.dropped_windows),
               static_cast<unsigned long long>(stats.sampling_errors));
  return 0;
}

// --- bench-overhead ---

struct BenchArgs {
  SourceOptions source;
  std::string command;
  int repetitions = 5;
  std::uint64_t interval_us = 500;
  int pin_core = -1;
  fs::path out;
};

int run_bench(const BenchArgs& args) {
  BenchConfig config;
  config.zone = resolve_zone(args.source);
  config.interval_us = args.interval_us;
  config.repetitions = args.repetitions;
  config.pin_core = args.pin_core;

  const OverheadReport report = bench_overhead(args.command, config);
  std::cout << report.to_text();
  if (!args.out.empty()) {
    std::ofstream f(args.out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + args.out.string());
    f << report.to_json().dump(2) << '\n';
  }
  return 0;
}

// --- dataset ---

int run_dataset_inspect(const fs::path& root) {
  const traceio::Dataset ds = traceio::load_dataset(root);
  std::printf("%-28s %8s %10s\n", "class", "traces", "length");
  for (const auto& [key, indices] : ds.class_index) {
    std::size_t min_len = std::numeric_limits<std::size_t>::max();
    std::size_t max_len = 0;
    for (std::size_t i : indices) {
      min_len = std::min(min_len, ds.traces[i].deltas.size());
      max_len = std::max(max_len, ds.traces[i].deltas.size());
    }
    const std::string len = min_len == max_len
                                ? std::to_string(min_len)
                                : std::to_string(min_len) + ".." + std::to_string(max_len);
    std::printf("%-28s %8zu %10s\n", key.c_str(), indices.size(), len.c_str());
  }
  std::printf("total %zu traces, %zu benign, %zu attack\n", ds.traces.size(),
              ds.count_of(traceio::Family::Benign), ds.count_of(traceio::Family::Attack));
  return 0;
}

struct SynthArgs {
  fs::path out;
  int benign_classes = 1;
  int attack_variants = 15;
  std::size_t traces = 50;
  std::size_t samples = 500;
  std::uint64_t seed = 0;
};

int run_dataset_synth(const SynthArgs& args) {
  const traceio::Dataset ds = sensor::synthetic_dataset(args.benign_classes, args.attack_variants,
                                                        args.traces, args.samples, args.seed);
  traceio::save_dataset(ds, args.out);
  std::printf("wrote synthetic dataset to %s\n", args.out.c_str());
  return 0;
}

struct ConvertArgs {
  fs::path matrix;
  fs::path out;
  fs::path label_map;
  std::string label_column = "label";
  std::uint64_t interval_us = 500;
};

// Adapter for matrix-style exports: one trace per row, one label column,
// remaining columns are the delta samples in order.
int run_dataset_convert(const ConvertArgs& args) {
  std::ifstream f(args.matrix, std::ios::binary);
  if (!f) throw IoError("cannot open " + args.matrix.string());

  std::map<std::string, traceio::ClassLabel> mapping;
  if (!args.label_map.empty()) {
    std::ifstream mf(args.label_map, std::ios::binary);
    if (!mf) throw IoError("cannot open " + args.label_map.string());
    const auto j = nlohmann::json::parse(mf, nullptr, false);
    if (j.is_discarded()) throw FormatError(1, args.label_map.string() + ": invalid JSON");
    for (const auto& [key, value] : j.items()) {
      const std::string name = value.value("name", key);
      mapping[key] = value.value("family", "benign") == "attack" ? traceio::attack_label(name)
                                                                 : traceio::benign_label(name);
    }
  }

  std::string line;
  if (!std::getline(f, line)) throw FormatError(1, args.matrix.string() + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  std::ptrdiff_t label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == args.label_column) label_col = static_cast<std::ptrdiff_t>(i);
  }
  if (label_col < 0) {
    throw FormatError(1, "label column '" + args.label_column + "' not found in header");
  }

  traceio::Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    traceio::EnergyTrace trace;
    trace.meta.nominal_interval_us = args.interval_us;
    std::string label_text;
    std::ptrdiff_t col = 0;
    while (std::getline(ss, tok, ',')) {
      if (col == label_col) {
        label_text = tok;
      } else {
        try {
          trace.deltas.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw FormatError(line_no, args.matrix.string() + ":" + std::to_string(line_no) +
                                         ": malformed value '" + tok + "'");
        }
      }
      ++col;
    }
    if (auto it = mapping.find(label_text); it != mapping.end()) {
      trace.label = it->second;
    } else if (traceio::attack_index_of(label_text)) {
      trace.label = traceio::attack_label(label_text);
    } else {
      trace.label = traceio::benign_label(label_text);
    }
    ds.add(std::move(trace));
  }
  if (ds.traces.empty()) throw EmptyDataset("no rows in " + args.matrix.string());
  traceio::save_dataset(ds, args.out);
  std::printf("converted %zu traces into %s\n", ds.traces.size(), args.out.c_str());
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Energy-trace microarchitectural attack detection toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  // collect
  CollectArgs collect;
  CLI::App* collect_cmd = app.add_subcommand("collect", "Record labeled energy traces");
  add_source_options(collect_cmd, collect.source, "live");
  collect_cmd->add_option("--out", collect.out, "Dataset root directory")->required();
  collect_cmd->add_option("--family", collect.family, "Class family: benign or attack")
      ->check(CLI::IsMember({"benign", "attack"}))
      ->capture_default_str();
  collect_cmd->add_option("--label", collect.label, "Class name (e.g. aobench, spectre-v1)")
      ->required();
  collect_cmd->add_option("--interval-us", collect.interval_us, "Sampling interval T_i")
      ->capture_default_str();
  collect_cmd->add_option("--samples", collect.samples, "Samples per trace N_s")
      ->capture_default_str();
  collect_cmd->add_option("--measurements", collect.measurements, "Measurements N_M")
      ->capture_default_str();
  collect_cmd->add_option("--sleep-ms", collect.sleep_ms, "Sleep between measurements")
      ->capture_default_str();
  collect_cmd->add_option("--start-hook", collect.start_hook,
                          "Command run before each measurement");
  collect_cmd->add_option("--stop-hook", collect.stop_hook, "Command run after each measurement");

  // train
  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a detector or recognizer model");
  train_cmd->add_option("--task", train.task, "ad (detector) or ar (recognizer)")
      ->check(CLI::IsMember({"ad", "ar"}))
      ->required();
  train_cmd->add_option("--algo", train.algo, "cnn, knn, or rf")
      ->check(CLI::IsMember({"cnn", "knn", "rf"}))
      ->capture_default_str();
  train_cmd->add_option("--data", train.data, "Dataset root directory")->required();
  train_cmd->add_option("--out", train.out, "Output model file")->required();
  train_cmd->add_option("--samples", train.samples, "Input length (traces truncated to this)")
      ->capture_default_str();
  train_cmd->add_option("--train-per-class", train.train_per_class, "")->capture_default_str();
  train_cmd->add_option("--val-per-class", train.val_per_class, "")->capture_default_str();
  train_cmd->add_option("--split-seed", train.split_seed, "")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Weight init / shuffle seed")->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs, "")->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "")->capture_default_str();
  train_cmd->add_option("--patience", train.patience, "Early stopping patience")
      ->capture_default_str();
  train_cmd->add_option("--lr", train.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--threshold", train.threshold, "Detection threshold for reports")
      ->capture_default_str();
  train_cmd->add_option("--history", train.history, "Per-epoch history CSV (cnn)");
  train_cmd->add_option("--report", train.report, "Validation report JSON");
  train_cmd->add_option("--standardizer", train.standardizer_out, "Standardizer JSON output");
  train_cmd->add_option("--k", train.knn_k, "KNN neighbor count (default: ad 3, ar 2)");
  train_cmd->add_option("--minkowski-p", train.minkowski_p, "KNN Minkowski exponent")
      ->capture_default_str();
  train_cmd->add_option("--trees", train.rf_trees, "Random forest size")->capture_default_str();
  train_cmd->add_option("--depth", train.rf_depth, "Random forest max depth")
      ->capture_default_str();
  train_cmd->add_flag("--verbose", train.verbose, "Per-epoch progress on stderr");

  // evaluate
  EvaluateArgs evaluate;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model on a dataset");
  eval_cmd->add_option("--model", evaluate.model, "Model file")->required();
  eval_cmd->add_option("--data", evaluate.data, "Dataset root directory")->required();
  eval_cmd->add_option("--threshold", evaluate.threshold, "Detection threshold")
      ->capture_default_str();
  eval_cmd->add_option("--report", evaluate.report, "Report JSON output");
  eval_cmd->add_option("--confusion", evaluate.confusion, "Confusion matrix CSV output");

  // monitor
  MonitorArgs monitor;
  CLI::App* monitor_cmd = app.add_subcommand("monitor", "Online detection loop");
  add_source_options(monitor_cmd, monitor.source, "live");
  monitor_cmd->add_option("--ad-model", monitor.config.ad_model, "Detector model file")
      ->required();
  monitor_cmd->add_option("--ar-model", monitor.config.ar_model,
                          "Recognizer model file (optional)");
  monitor_cmd->add_option("--interval-us", monitor.config.interval_us, "Sampling interval")
      ->capture_default_str();
  monitor_cmd->add_option("--threshold", monitor.config.threshold, "Anomaly threshold")
      ->capture_default_str();
  monitor_cmd->add_option("--alerts", monitor.config.alert_sink,
                          "Alert sink path, or - for stdout")
      ->capture_default_str();
  monitor_cmd->add_option("--standardizer", monitor.config.standardizer,
                          "Standardizer JSON overriding the one embedded in the models");
  monitor_cmd->add_option("--windows", monitor.windows, "Stop after N windows (0 = run on)")
      ->capture_default_str();
  monitor_cmd->add_option("--queue-capacity", monitor.config.queue_capacity,
                          "Bounded window queue size")
      ->capture_default_str();

  // bench-overhead
  BenchArgs bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench-overhead", "Measure sampling overhead on a workload");
  add_source_options(bench_cmd, bench.source, "live");
  bench_cmd->add_option("--command", bench.command, "Workload command")->required();
  bench_cmd->add_option("--reps", bench.repetitions, "Repetitions (>= 3, median reported)")
      ->capture_default_str();
  bench_cmd->add_option("--interval-us", bench.interval_us, "Sampling interval")
      ->capture_default_str();
  bench_cmd->add_option("--pin-core", bench.pin_core, "Pin the sampler thread to a core")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Report JSON output");

  // dataset
  CLI::App* dataset_cmd = app.add_subcommand("dataset", "Inspect, generate, or convert datasets");
  dataset_cmd->require_subcommand(1);

  fs::path inspect_root;
  CLI::App* inspect_cmd = dataset_cmd->add_subcommand("inspect", "Summarize a dataset directory");
  inspect_cmd->add_option("--root", inspect_root, "Dataset root")->required();

  SynthArgs synth;
  CLI::App* synth_cmd = dataset_cmd->add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "Dataset root to create")->required();
  synth_cmd->add_option("--benign-classes", synth.benign_classes, "")->capture_default_str();
  synth_cmd->add_option("--attack-variants", synth.attack_variants, "")->capture_default_str();
  synth_cmd->add_option("--traces", synth.traces, "Traces per class")->capture_default_str();
  synth_cmd->add_option("--samples", synth.samples, "Samples per trace")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "")->capture_default_str();

  ConvertArgs convert;
  CLI::App* convert_cmd =
      dataset_cmd->add_subcommand("convert", "Convert a matrix CSV export to the dataset layout");
  convert_cmd->add_option("--matrix", convert.matrix, "CSV with one trace per row")->required();
  convert_cmd->add_option("--out", convert.out, "Dataset root to create")->required();
  convert_cmd->add_option("--label-column", convert.label_column, "Label column name")
      ->capture_default_str();
  convert_cmd->add_option("--label-map", convert.label_map,
                          "JSON mapping of CSV labels to {family, name}");
  convert_cmd->add_option("--interval-us", convert.interval_us, "Nominal interval metadata")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    std::cerr << app.help() << '\n';
    return 2;
  }

  try {
    if (collect_cmd->parsed()) return run_collect(collect);
    if (train_cmd->parsed()) return run_train(train);
    if (eval_cmd->parsed()) return run_evaluate(evaluate);
    if (monitor_cmd->parsed()) return run_monitor_cmd(monitor);
    if (bench_cmd->parsed()) return run_bench(bench);
    if (dataset_cmd->parsed()) {
      if (inspect_cmd->parsed()) return run_dataset_inspect(inspect_root);
      if (synth_cmd->parsed()) return run_dataset_synth(synth);
      if (convert_cmd->parsed()) return run_dataset_convert(convert);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace energuard::engine
