#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "energuard/power_domain.hpp"
#include "energuard/traceio.hpp"

namespace energuard::sensor {

struct RaplZone {
  std::string name;                   // zone name as reported by sysfs
  std::filesystem::path energy_path;  // .../energy_uj
  std::uint64_t max_energy_range_uj = 0;
  PowerDomain domain = PowerDomain::Package;
  int package = 0;  // parent package index, parsed from the zone directory
};

// Algorithm parameters of one collection run: sampling interval T_i,
// samples per trace N_s, measurements per class N_M.
struct CollectorConfig {
  std::uint64_t interval_us = 500;
  std::size_t samples_per_trace = 3000;
  std::size_t measurements = 50;
  PowerDomain domain = PowerDomain::PP0;
  std::chrono::milliseconds inter_measurement_sleep{1000};

  void validate() const;
};

struct EnergySample {
  std::size_t seq = 0;
  std::uint64_t e1_uj = 0;           // raw counter at t
  std::uint64_t e2_uj = 0;           // raw counter at t + T_i
  std::uint64_t delta_uj = 0;        // wrap-corrected E2 - E1
  std::uint64_t t_monotonic_ns = 0;  // monotonic timestamp of the first read
};

// Powercap root; the ENERGUARD_POWERCAP_ROOT environment variable
// overrides the kernel default (useful for fixture-based tests).
std::filesystem::path default_powercap_root();

// All readable zones under the root: parent zones intel-rapl:<P> tagged
// Package, sub-zones intel-rapl:<P>:<S> mapped by their reported name
// (core -> PP0, uncore -> PP1, dram -> Dram). Empty if the root is absent.
// Throws PermissionDenied when a zone's energy attribute exists but cannot
// be opened, naming the path that needs privileged access.
std::vector<RaplZone> discover_zones(const std::filesystem::path& root);

std::optional<RaplZone> find_zone(const std::vector<RaplZone>& zones, PowerDomain domain,
                                  int package = 0);

std::uint64_t read_energy_uj(const RaplZone& zone);

// Modular counter difference: (e2 - e1) mod max_range_uj.
std::uint64_t wrap_delta_uj(std::uint64_t e1, std::uint64_t e2, std::uint64_t max_range_uj);

EnergySample sample_delta(const RaplZone& zone, std::uint64_t interval_us);

// A stream of energy deltas. Live sources pace themselves on an absolute
// deadline clock; replay and synthetic sources return immediately.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual EnergySample next(std::uint64_t interval_us) = 0;
  virtual void reset() {}
  virtual PowerDomain domain() const { return PowerDomain::PP0; }
  // True when the stream has no real-time pacing (replay/synthetic);
  // consumers may then apply backpressure instead of dropping data.
  virtual bool offline() const { return true; }
};

class LiveSource final : public SampleSource {
 public:
  explicit LiveSource(const RaplZone& zone);
  ~LiveSource() override;
  LiveSource(const LiveSource&) = delete;
  LiveSource& operator=(const LiveSource&) = delete;

  EnergySample next(std::uint64_t interval_us) override;
  void reset() override;
  PowerDomain domain() const override { return zone_.domain; }
  bool offline() const override { return false; }

 private:
  std::uint64_t read_counter();

  RaplZone zone_;
  int fd_ = -1;
  std::size_t seq_ = 0;
  bool primed_ = false;
  std::uint64_t prev_uj_ = 0;
  std::uint64_t prev_t_ns_ = 0;
  std::chrono::steady_clock::time_point deadline_{};
};

class ReplaySource final : public SampleSource {
 public:
  ReplaySource(const std::filesystem::path& trace_csv, bool loop);

  EnergySample next(std::uint64_t interval_us) override;
  void reset() override;
  PowerDomain domain() const override { return domain_; }
  std::size_t available() const { return deltas_.size(); }

 private:
  std::vector<std::uint64_t> deltas_;
  PowerDomain domain_ = PowerDomain::PP0;
  bool loop_ = false;
  std::size_t pos_ = 0;
  std::size_t seq_ = 0;
  std::uint64_t accumulated_uj_ = 0;
};

struct SyntheticSpec {
  enum class Kind { BenignNoise, AttackBurst };
  Kind kind = Kind::BenignNoise;
  double mean_uj = 2000.0;
  double sigma_uj = 300.0;
  double burst_amplitude_uj = 2500.0;  // AttackBurst only
  std::size_t burst_period = 50;       // samples; bursts occupy half the period
};

// "benign-noise" and "attack-burst" with default parameters.
SyntheticSpec parse_generator(const std::string& id);

// Parameter table for the 15 synthetic attack variants (distinct burst
// amplitude/period per variant) used as dataset stand-ins.
SyntheticSpec attack_variant(int variant);

class SyntheticSource final : public SampleSource {
 public:
  SyntheticSource(const SyntheticSpec& spec, std::uint64_t seed);

  EnergySample next(std::uint64_t interval_us) override;
  void reset() override;

 private:
  SyntheticSpec spec_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
  std::size_t seq_ = 0;
  std::uint64_t accumulated_uj_ = 0;
};

// One measurement: exactly N_s delta samples in capture order.
traceio::EnergyTrace collect_trace(SampleSource& source, const CollectorConfig& config);

// Deterministic synthetic trace; generator is a parse_generator() id.
traceio::EnergyTrace synth_trace(const std::string& generator, std::uint64_t seed,
                                 std::size_t n_samples);

// In-memory labeled dataset from the synthetic generators: `benign_classes`
// benign-noise classes plus the first `attack_variants` attack variants,
// `traces_per_class` measurements each. Deterministic for a given seed.
traceio::Dataset synthetic_dataset(int benign_classes, int attack_variants,
                                   std::size_t traces_per_class, std::size_t n_samples,
                                   std::uint64_t seed);

// N_M labeled measurements with start/stop hooks around each one. Completed
// traces are handed to the sink as soon as their stop hook succeeds, so they
// survive a later HookFailed.
using TraceSink = std::function<void(std::size_t measurement, traceio::EnergyTrace trace)>;
void collect_campaign(SampleSource& source, const CollectorConfig& config,
                      const traceio::ClassLabel& label, const std::string& start_hook,
                      const std::string& stop_hook, const TraceSink& sink);
std::vector<traceio::EnergyTrace> collect_campaign(SampleSource& source,
                                                   const CollectorConfig& config,
                                                   const traceio::ClassLabel& label,
                                                   const std::string& start_hook,
                                                   const std::string& stop_hook);

}  // namespace energuard::sensor
