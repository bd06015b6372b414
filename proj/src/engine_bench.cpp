#include "energuard/engine/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <vector>

#include <sched.h>

#include "energuard/errors.hpp"

namespace energuard::engine {

namespace {

double time_command_s(const std::string& command) {
  const auto start = std::chrono::steady_clock::now();
  const int status = std::system(command.c_str());
  const auto stop = std::chrono::steady_clock::now();
  if (status != 0) {
    throw CommandFailed("benchmark command exited with status " + std::to_string(status) + ": " +
                        command);
  }
  return std::chrono::duration<double>(stop - start).count();
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

OverheadReport bench_overhead(const std::string& command, const BenchConfig& config) {
  if (config.repetitions < 3) {
    throw Error("bench_overhead requires at least 3 repetitions");
  }
  if (command.empty()) throw CommandFailed("empty benchmark command");

  std::vector<double> alone;
  for (int i = 0; i < config.repetitions; ++i) alone.push_back(time_command_s(command));

  std::vector<double> with_sampling;
  for (int i = 0; i < config.repetitions; ++i) {
    std::atomic<bool> stop{false};
    std::exception_ptr sampler_error;
    std::thread sampler([&] {
      try {
        if (config.pin_core >= 0) {
          cpu_set_t set;
          CPU_ZERO(&set);
          CPU_SET(config.pin_core, &set);
          sched_setaffinity(0, sizeof(set), &set);
        }
        sensor::LiveSource source(config.zone);
        while (!stop.load(std::memory_order_relaxed)) {
          source.next(config.interval_us);
        }
      } catch (...) {
        sampler_error = std::current_exception();
      }
    });
    double elapsed = 0.0;
    try {
      elapsed = time_command_s(command);
    } catch (...) {
      stop.store(true);
      sampler.join();
      throw;
    }
    stop.store(true);
    sampler.join();
    if (sampler_error) std::rethrow_exception(sampler_error);
    with_sampling.push_back(elapsed);
  }

  OverheadReport report;
  report.command = command;
  report.repetitions = config.repetitions;
  report.interval_us = config.interval_us;
  report.runtime_alone_s = median(alone);
  report.runtime_with_sampling_s = median(with_sampling);
  report.overhead_pct = report.runtime_alone_s > 0.0
                            ? (report.runtime_with_sampling_s - report.runtime_alone_s) /
                                  report.runtime_alone_s * 100.0
                            : 0.0;
  return report;
}

std::string OverheadReport::to_text() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "command %s\nrepetitions %d\ninterval_us %llu\nruntime_alone_s %.6f\n"
                "runtime_with_sampling_s %.6f\noverhead_pct %.3f\n",
                command.c_str(), repetitions, static_cast<unsigned long long>(interval_us),
                runtime_alone_s, runtime_with_sampling_s, overhead_pct);
  return buf;
}

nlohmann::json OverheadReport::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["repetitions"] = repetitions;
  j["interval_us"] = interval_us;
  j["runtime_alone_s"] = runtime_alone_s;
  j["runtime_with_sampling_s"] = runtime_with_sampling_s;
  j["overhead_pct"] = overhead_pct;
  return j;
}

}  // namespace energuard::engine
