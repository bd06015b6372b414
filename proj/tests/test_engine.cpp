#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "energuard/engine/bench.hpp"
#include "energuard/engine/cli.hpp"
#include "energuard/engine/monitor.hpp"
#include "energuard/models.hpp"
#include "energuard/sensor.hpp"
#include "test_helpers.hpp"

using namespace energuard;
using energuard::testing::TempDir;
using energuard::testing::make_powercap_fixture;

namespace {

constexpr std::size_t kWindow = 150;

models::AdParams mini_ad() {
  models::AdParams p;
  p.conv_filters = {4, 4, 8};
  p.pool_size = 5;
  p.dense_units = {16, 8};
  return p;
}

models::ArParams mini_ar() {
  models::ArParams p;
  p.conv_filters = {4, 4, 8, 8};
  p.pool_size = 5;
  p.dense_units = {16, 16, 8};
  return p;
}

// Untrained models are enough for the structural monitor contracts.
void write_models(const std::filesystem::path& dir, std::filesystem::path& ad_path,
                  std::filesystem::path& ar_path) {
  models::TrainedModel ad{models::build_ad(kWindow, 1, mini_ad()),
                          traceio::Standardizer{2000.0, 400.0},
                          {"benign", "anomaly"},
                          "ad"};
  ad_path = dir / "ad.egm";
  models::save_model(ad, ad_path);

  std::vector<std::string> names(traceio::attack_names().begin(), traceio::attack_names().end());
  models::TrainedModel ar{models::build_ar(kWindow, 2, mini_ar()),
                          traceio::Standardizer{2000.0, 400.0}, names, "ar"};
  ar_path = dir / "ar.egm";
  models::save_model(ar, ar_path);
}

// 10 benign windows followed by 5 attack windows in one replay file.
std::filesystem::path write_replay_stream(const std::filesystem::path& dir) {
  traceio::EnergyTrace stream;
  sensor::CollectorConfig config;
  config.samples_per_trace = kWindow;
  sensor::SyntheticSource benign(sensor::SyntheticSpec{}, 5);
  for (int w = 0; w < 10; ++w) {
    const auto t = sensor::collect_trace(benign, config);
    stream.deltas.insert(stream.deltas.end(), t.deltas.begin(), t.deltas.end());
  }
  sensor::SyntheticSource attack(sensor::attack_variant(3), 6);
  for (int w = 0; w < 5; ++w) {
    const auto t = sensor::collect_trace(attack, config);
    stream.deltas.insert(stream.deltas.end(), t.deltas.begin(), t.deltas.end());
  }
  const auto path = dir / "stream.csv";
  traceio::write_trace(stream, path);
  return path;
}

}  // namespace

TEST_CASE("alert lines round trip") {
  engine::DetectionVerdict v;
  v.window_id = 42;
  v.anomaly = true;
  v.ad_score = 0.9375;
  v.window_start = "2026-01-01T00:00:00Z";
  v.window_end = "2026-01-01T00:00:01Z";
  v.attack = engine::AttackId{"spectre-v1", 3, 0.8125};

  const auto line = engine::to_alert_line(v);
  const auto back = engine::parse_alert_line(line);
  CHECK(back == v);

  engine::DetectionVerdict benign;
  benign.window_id = 1;
  benign.ad_score = 0.125;
  const auto line2 = engine::to_alert_line(benign);
  const auto back2 = engine::parse_alert_line(line2);
  CHECK(back2.anomaly == false);
  CHECK(!back2.attack.has_value());

  CHECK_THROWS_AS(engine::parse_alert_line("not json"), FormatError);
}

TEST_CASE("monitor contracts on a replay stream") {
  TempDir tmp;
  std::filesystem::path ad_path;
  std::filesystem::path ar_path;
  write_models(tmp.path, ad_path, ar_path);
  const auto stream = write_replay_stream(tmp.path);

  engine::MonitorConfig config;
  config.ad_model = ad_path;
  config.ar_model = ar_path;
  config.alert_sink = (tmp.path / "alerts.jsonl").string();

  const auto run = [&](double threshold) {
    config.threshold = threshold;
    sensor::ReplaySource source(stream, /*loop=*/false);
    std::vector<engine::DetectionVerdict> verdicts;
    const auto stats = engine::run_monitor(config, source, [&](const engine::DetectionVerdict& v) {
      verdicts.push_back(v);
    });
    return std::make_pair(stats, verdicts);
  };

  SUBCASE("15 windows, recognizer gated on anomalies, ordered ids") {
    const auto [stats, verdicts] = run(0.5);
    CHECK(stats.windows == 15);
    CHECK(stats.ar_invocations == stats.anomalies);
    CHECK(stats.dropped_windows == 0);
    CHECK(stats.sampling_errors == 0);
    REQUIRE(verdicts.size() == 15);
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      CHECK(verdicts[i].window_id == i);
      CHECK(verdicts[i].attack.has_value() == verdicts[i].anomaly);
    }

    // One parseable alert line per verdict, in order.
    std::ifstream alerts(tmp.path / "alerts.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(alerts, line)) {
      const auto v = engine::parse_alert_line(line);
      CHECK(v.window_id == lines);
      ++lines;
    }
    CHECK(lines == 15);
  }

  SUBCASE("threshold above 1 never flags an anomaly") {
    const auto [stats, verdicts] = run(1.01);
    CHECK(stats.windows == 15);
    CHECK(stats.anomalies == 0);
    CHECK(stats.ar_invocations == 0);
    for (const auto& v : verdicts) CHECK(!v.anomaly);
  }

  SUBCASE("threshold 0 routes every window through the recognizer") {
    const auto [stats, verdicts] = run(0.0);
    CHECK(stats.anomalies == 15);
    CHECK(stats.ar_invocations == 15);
    for (const auto& v : verdicts) {
      REQUIRE(v.attack.has_value());
      CHECK(v.attack->attack_index >= 0);
      CHECK(v.attack->attack_index < 15);
    }
  }

  SUBCASE("replay determinism: identical verdict sequences") {
    const auto [stats1, verdicts1] = run(0.5);
    const auto [stats2, verdicts2] = run(0.5);
    REQUIRE(verdicts1.size() == verdicts2.size());
    for (std::size_t i = 0; i < verdicts1.size(); ++i) {
      CHECK(verdicts1[i].window_id == verdicts2[i].window_id);
      CHECK(verdicts1[i].anomaly == verdicts2[i].anomaly);
      CHECK(verdicts1[i].ad_score == verdicts2[i].ad_score);
      if (verdicts1[i].attack) {
        CHECK(verdicts1[i].attack->name == verdicts2[i].attack->name);
      }
    }
  }

  SUBCASE("max_windows caps the run") {
    config.max_windows = 4;
    sensor::ReplaySource source(stream, /*loop=*/true);
    const auto stats = engine::run_monitor(config, source);
    CHECK(stats.windows == 4);
  }

  SUBCASE("detector-only monitor leaves attack fields empty") {
    config.ar_model.clear();
    config.threshold = 0.0;
    sensor::ReplaySource source(stream, /*loop=*/false);
    std::size_t with_attack = 0;
    const auto stats = engine::run_monitor(config, source, [&](const engine::DetectionVerdict& v) {
      with_attack += v.attack.has_value();
    });
    CHECK(stats.anomalies == 15);
    CHECK(stats.ar_invocations == 0);
    CHECK(with_attack == 0);
  }
}

namespace {

// Synthetic stream that claims to be live: the monitor must never block
// the producer on it and sheds load by dropping the oldest window.
class FakeLiveSource final : public sensor::SampleSource {
 public:
  explicit FakeLiveSource(std::uint64_t seed) : inner_(sensor::SyntheticSpec{}, seed) {}
  sensor::EnergySample next(std::uint64_t interval_us) override { return inner_.next(interval_us); }
  bool offline() const override { return false; }

 private:
  sensor::SyntheticSource inner_;
};

}  // namespace

TEST_CASE("live sources shed load instead of blocking the sampler") {
  TempDir tmp;
  std::filesystem::path ad_path;
  std::filesystem::path ar_path;
  write_models(tmp.path, ad_path, ar_path);

  engine::MonitorConfig config;
  config.ad_model = ad_path;
  config.alert_sink = (tmp.path / "alerts.jsonl").string();
  config.max_windows = 200;
  config.queue_capacity = 1;

  FakeLiveSource source(77);
  const auto stats = engine::run_monitor(config, source);
  // Every produced window is either processed or dropped, never both.
  CHECK(stats.windows + stats.dropped_windows == 200);
  CHECK(stats.windows > 0);
  // Window generation outpaces inference by orders of magnitude here, so
  // the bounded queue must have shed something.
  CHECK(stats.dropped_windows > 0);
}

TEST_CASE("monitor startup failures") {
  TempDir tmp;
  std::filesystem::path ad_path;
  std::filesystem::path ar_path;
  write_models(tmp.path, ad_path, ar_path);
  const auto stream = write_replay_stream(tmp.path);

  SUBCASE("missing model file") {
    engine::MonitorConfig config;
    config.ad_model = tmp.path / "missing.egm";
    sensor::ReplaySource source(stream, false);
    CHECK_THROWS_AS(engine::run_monitor(config, source), IoError);
  }
  SUBCASE("window size must match the detector input") {
    engine::MonitorConfig config;
    config.ad_model = ad_path;
    config.n_samples = kWindow + 1;
    sensor::ReplaySource source(stream, false);
    CHECK_THROWS_AS(engine::run_monitor(config, source), LengthMismatch);
  }
  SUBCASE("unwritable sink") {
    engine::MonitorConfig config;
    config.ad_model = ad_path;
    config.alert_sink = (tmp.path / "no-dir" / "alerts.jsonl").string();
    sensor::ReplaySource source(stream, false);
    CHECK_THROWS_AS(engine::run_monitor(config, source), SinkError);
  }
  SUBCASE("swapped model roles are rejected") {
    engine::MonitorConfig config;
    config.ad_model = ar_path;
    sensor::ReplaySource source(stream, false);
    CHECK_THROWS_AS(engine::run_monitor(config, source), Error);
  }
}

TEST_CASE("bench_overhead produces a sane report from a fixture zone") {
  TempDir tmp;
  const auto root = make_powercap_fixture(tmp.path);
  const auto zones = sensor::discover_zones(root);

  engine::BenchConfig config;
  config.zone = *sensor::find_zone(zones, PowerDomain::PP0, 0);
  config.repetitions = 3;
  config.interval_us = 500;

  const auto report = engine::bench_overhead("true", config);
  CHECK(report.runtime_alone_s >= 0.0);
  CHECK(report.runtime_with_sampling_s >= 0.0);
  CHECK(report.repetitions == 3);
  CHECK(!report.to_text().empty());
  CHECK(report.to_json().contains("overhead_pct"));

  SUBCASE("fewer than 3 repetitions violates the invariant") {
    config.repetitions = 1;
    CHECK_THROWS_AS(engine::bench_overhead("true", config), Error);
  }
  SUBCASE("failing commands are reported") {
    config.repetitions = 3;
    CHECK_THROWS_AS(engine::bench_overhead("exit 3", config), CommandFailed);
  }
}

namespace {

int dispatch(std::vector<std::string> args) {
  std::vector<const char*> argv{"energuard"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return engine::cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("cli exit codes") {
  TempDir tmp;

  SUBCASE("no arguments is a usage error") { CHECK(dispatch({}) == 2); }
  SUBCASE("unknown subcommand is a usage error") { CHECK(dispatch({"frobnicate"}) == 2); }

  SUBCASE("train then evaluate a fixture dataset") {
    const auto ds = sensor::synthetic_dataset(1, 1, 5, 160, 0);
    traceio::save_dataset(ds, tmp.path / "ds");
    const auto model = (tmp.path / "m.egm").string();
    CHECK(dispatch({"train", "--task", "ad", "--data", (tmp.path / "ds").string(), "--samples",
                    "150", "--train-per-class", "4", "--val-per-class", "1", "--epochs", "1",
                    "--seed", "0", "--out", model}) == 0);
    CHECK(std::filesystem::exists(model));
    CHECK(dispatch({"evaluate", "--model", model, "--data", (tmp.path / "ds").string(),
                    "--report", (tmp.path / "r.json").string()}) == 0);
    CHECK(std::filesystem::exists(tmp.path / "r.json"));
  }

  SUBCASE("knn training via the cli") {
    const auto ds = sensor::synthetic_dataset(1, 1, 4, 80, 1);
    traceio::save_dataset(ds, tmp.path / "ds");
    const auto model = (tmp.path / "knn.egm").string();
    CHECK(dispatch({"train", "--task", "ad", "--algo", "knn", "--data",
                    (tmp.path / "ds").string(), "--samples", "80", "--train-per-class", "3",
                    "--val-per-class", "1", "--out", model}) == 0);
    CHECK(std::filesystem::exists(model));
  }

  SUBCASE("monitor with a missing model fails at startup") {
    CHECK(dispatch({"monitor", "--ad-model", (tmp.path / "missing.egm").string(), "--source",
                    "synthetic", "--windows", "1"}) == 1);
  }

  SUBCASE("dataset synth + inspect") {
    CHECK(dispatch({"dataset", "synth", "--out", (tmp.path / "sds").string(),
                    "--benign-classes", "1", "--attack-variants", "2", "--traces", "2",
                    "--samples", "40"}) == 0);
    CHECK(dispatch({"dataset", "inspect", "--root", (tmp.path / "sds").string()}) == 0);
  }

  SUBCASE("collect a campaign from a fixture powercap tree") {
    const auto root = make_powercap_fixture(tmp.path / "pc");
    CHECK(dispatch({"collect", "--source", "live", "--powercap-root", root.string(), "--out",
                    (tmp.path / "rec").string(), "--label", "idle", "--interval-us", "100",
                    "--samples", "20", "--measurements", "2", "--sleep-ms", "0"}) == 0);
    const auto ds = traceio::load_dataset(tmp.path / "rec");
    CHECK(ds.traces.size() == 2);
    CHECK(ds.traces[0].deltas.size() == 20);
  }

  SUBCASE("bench-overhead against a fixture zone") {
    const auto root = make_powercap_fixture(tmp.path / "pc");
    CHECK(dispatch({"bench-overhead", "--powercap-root", root.string(), "--command", "true",
                    "--reps", "3", "--out", (tmp.path / "bench.json").string()}) == 0);
    CHECK(std::filesystem::exists(tmp.path / "bench.json"));
  }

  SUBCASE("dataset convert ingests a matrix export") {
    std::ofstream csv(tmp.path / "matrix.csv");
    csv << "label,s0,s1,s2,s3\n";
    csv << "aobench,1,2,3,4\n";
    csv << "aobench,5,6,7,8\n";
    csv << "spectre-v1,9,10,11,12\n";
    csv.close();
    CHECK(dispatch({"dataset", "convert", "--matrix", (tmp.path / "matrix.csv").string(),
                    "--out", (tmp.path / "conv").string()}) == 0);
    const auto ds = traceio::load_dataset(tmp.path / "conv");
    CHECK(ds.traces.size() == 3);
    CHECK(ds.class_index.count("attack/spectre-v1") == 1);
    CHECK(ds.class_index.count("benign/aobench") == 1);
  }

  SUBCASE("monitor replay via the cli writes alerts") {
    std::filesystem::path ad_path;
    std::filesystem::path ar_path;
    write_models(tmp.path, ad_path, ar_path);
    const auto stream = write_replay_stream(tmp.path);
    const auto alerts = (tmp.path / "alerts.jsonl").string();
    CHECK(dispatch({"monitor", "--ad-model", ad_path.string(), "--ar-model", ar_path.string(),
                    "--source", "replay", "--replay", stream.string(), "--alerts", alerts}) == 0);
    std::ifstream f(alerts);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(f, line)) ++lines;
    CHECK(lines == 15);
  }
}
