#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "energuard/sensor.hpp"

namespace energuard::engine {

struct BenchConfig {
  sensor::RaplZone zone;        // zone sampled during the "with sampling" runs
  std::uint64_t interval_us = 500;
  int repetitions = 5;          // must be >= 3; medians are reported
  int pin_core = -1;            // >= 0 pins the sampler thread to that core
};

struct OverheadReport {
  std::string command;
  double runtime_alone_s = 0.0;
  double runtime_with_sampling_s = 0.0;
  double overhead_pct = 0.0;  // (with - alone) / alone * 100
  int repetitions = 0;
  std::uint64_t interval_us = 0;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

// Median wall time of `command` run alone vs with a concurrent sampler
// reading the configured zone at the nominal interval.
OverheadReport bench_overhead(const std::string& command, const BenchConfig& config);

}  // namespace energuard::engine
