#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "energuard/sensor.hpp"

namespace energuard::engine {

struct AttackId {
  std::string name;
  int attack_index = -1;
  double confidence = 0.0;

  bool operator==(const AttackId&) const = default;
};

struct DetectionVerdict {
  std::uint64_t window_id = 0;
  bool anomaly = false;
  double ad_score = 0.0;
  std::optional<AttackId> attack;  // present iff anomaly and an AR model is loaded
  std::string window_start;        // ISO-8601 UTC
  std::string window_end;

  bool operator==(const DetectionVerdict&) const = default;
};

struct MonitorConfig {
  std::filesystem::path ad_model;
  std::filesystem::path ar_model;      // empty: detection only
  std::size_t n_samples = 0;           // 0: use the AD model input length
  std::uint64_t interval_us = 500;
  double threshold = 0.5;
  std::string alert_sink = "-";        // "-" = stdout, otherwise a file path (append)
  std::filesystem::path standardizer;  // optional override of the embedded one
  std::size_t max_windows = 0;         // 0: run until stop or source exhaustion
  std::size_t queue_capacity = 8;
  std::atomic<bool>* stop = nullptr;   // optional external stop flag
};

struct MonitorStats {
  std::uint64_t windows = 0;
  std::uint64_t anomalies = 0;
  std::uint64_t ar_invocations = 0;
  std::uint64_t dropped_windows = 0;
  std::uint64_t sampling_errors = 0;
};

using VerdictCallback = std::function<void(const DetectionVerdict&)>;

// Online phase: sample back-to-back windows of n_samples deltas, run the
// detector on each, run the recognizer on the same window only when the
// detector flags an anomaly, and append one structured line per verdict to
// the alert sink. Sampling runs on a producer thread feeding a bounded
// queue; live sources drop the oldest window on overflow, offline sources
// apply backpressure so replay stays deterministic.
MonitorStats run_monitor(const MonitorConfig& config, sensor::SampleSource& source,
                         const VerdictCallback& on_verdict = {});

std::string to_alert_line(const DetectionVerdict& verdict);
DetectionVerdict parse_alert_line(const std::string& line);

}  // namespace energuard::engine
