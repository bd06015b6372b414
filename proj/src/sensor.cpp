#include "energuard/sensor.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <thread>

#include <fcntl.h>
#include <unistd.h>

#include "energuard/errors.hpp"

namespace energuard::sensor {

namespace fs = std::filesystem;
using steady = std::chrono::steady_clock;

void CollectorConfig::validate() const {
  if (interval_us < 1) throw Error("interval_us must be >= 1");
  if (samples_per_trace < 1) throw Error("samples_per_trace must be >= 1");
  if (measurements < 1) throw Error("measurements must be >= 1");
}

fs::path default_powercap_root() {
  if (const char* env = std::getenv("ENERGUARD_POWERCAP_ROOT"); env && *env) {
    return fs::path(env);
  }
  return "/sys/devices/virtual/powercap/intel-rapl";
}

namespace {

std::uint64_t now_monotonic_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(steady::now().time_since_epoch())
          .count());
}

std::string iso8601_utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t parse_counter(std::string_view text, const fs::path& path) {
  std::size_t end = text.size();
  while (end > 0 && (text[end - 1] == '\n' || text[end - 1] == '\r' || text[end - 1] == ' ')) {
    --end;
  }
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + end, value);
  if (ec != std::errc{} || ptr != text.data() + end || end == 0) {
    throw ParseError("malformed counter value in " + path.string() + ": '" +
                     std::string(text.substr(0, end)) + "'");
  }
  return value;
}

std::uint64_t read_counter_file(const fs::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) {
    if (errno == EACCES || errno == EPERM) {
      throw PermissionDenied("cannot read " + path.string() +
                             ": permission denied (the powercap energy attributes "
                             "require admin privilege; run with access to " +
                             path.string() + ")");
    }
    throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  }
  char buf[64];
  const ssize_t n = ::read(fd, buf, sizeof(buf) - 1);
  const int saved = errno;
  ::close(fd);
  if (n < 0) throw IoError("read failed on " + path.string() + ": " + std::strerror(saved));
  return parse_counter(std::string_view(buf, static_cast<std::size_t>(n)), path);
}

std::string read_text_file(const fs::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) {
    if (errno == EACCES || errno == EPERM) {
      throw PermissionDenied("cannot read " + path.string() + ": permission denied");
    }
    throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  }
  char buf[256];
  const ssize_t n = ::read(fd, buf, sizeof(buf) - 1);
  ::close(fd);
  if (n < 0) throw IoError("read failed on " + path.string());
  std::string s(buf, static_cast<std::size_t>(n));
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

// intel-rapl:<P> or intel-rapl:<P>:<S>
bool parse_zone_dirname(const std::string& name, int& package, bool& is_subzone) {
  constexpr std::string_view prefix = "intel-rapl:";
  if (name.rfind(prefix, 0) != 0) return false;
  const std::string rest = name.substr(prefix.size());
  const auto colon = rest.find(':');
  const std::string pkg_str = colon == std::string::npos ? rest : rest.substr(0, colon);
  if (pkg_str.empty() || !std::all_of(pkg_str.begin(), pkg_str.end(),
                                      [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  package = std::atoi(pkg_str.c_str());
  is_subzone = colon != std::string::npos;
  return true;
}

std::optional<RaplZone> probe_zone(const fs::path& dir, int package, bool is_subzone) {
  const fs::path energy = dir / "energy_uj";
  if (!fs::exists(energy)) return std::nullopt;

  RaplZone zone;
  zone.package = package;
  zone.energy_path = energy;
  zone.name = read_text_file(dir / "name");

  if (is_subzone) {
    auto domain = power_domain_from_string(zone.name);
    if (!domain || *domain == PowerDomain::Package) return std::nullopt;  // unknown sub-zone
    zone.domain = *domain;
  } else {
    zone.domain = PowerDomain::Package;
  }

  zone.max_energy_range_uj = read_counter_file(dir / "max_energy_range_uj");
  if (zone.max_energy_range_uj == 0) return std::nullopt;

  // Readability check doubles as the privilege probe: read_counter_file
  // raises PermissionDenied when the attribute exists but is protected.
  read_counter_file(energy);
  return zone;
}

}  // namespace

std::vector<RaplZone> discover_zones(const fs::path& root) {
  std::vector<RaplZone> zones;
  if (!fs::is_directory(root)) return zones;

  std::vector<fs::path> parents;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) parents.push_back(e.path());
  }
  std::sort(parents.begin(), parents.end());

  for (const auto& parent : parents) {
    int package = 0;
    bool is_subzone = false;
    if (!parse_zone_dirname(parent.filename().string(), package, is_subzone) || is_subzone) {
      continue;
    }
    if (auto z = probe_zone(parent, package, /*is_subzone=*/false)) zones.push_back(*z);

    std::vector<fs::path> subs;
    for (const auto& e : fs::directory_iterator(parent)) {
      if (e.is_directory()) subs.push_back(e.path());
    }
    std::sort(subs.begin(), subs.end());
    for (const auto& sub : subs) {
      int sub_package = 0;
      bool sub_flag = false;
      if (!parse_zone_dirname(sub.filename().string(), sub_package, sub_flag) || !sub_flag) {
        continue;
      }
      if (auto z = probe_zone(sub, sub_package, /*is_subzone=*/true)) zones.push_back(*z);
    }
  }
  return zones;
}

std::optional<RaplZone> find_zone(const std::vector<RaplZone>& zones, PowerDomain domain,
                                  int package) {
  for (const auto& z : zones) {
    if (z.domain == domain && z.package == package) return z;
  }
  return std::nullopt;
}

std::uint64_t read_energy_uj(const RaplZone& zone) { return read_counter_file(zone.energy_path); }

std::uint64_t wrap_delta_uj(std::uint64_t e1, std::uint64_t e2, std::uint64_t max_range_uj) {
  if (e2 >= e1) return e2 - e1;
  return (max_range_uj - e1) + e2;
}

EnergySample sample_delta(const RaplZone& zone, std::uint64_t interval_us) {
  EnergySample s;
  s.e1_uj = read_energy_uj(zone);
  s.t_monotonic_ns = now_monotonic_ns();
  std::this_thread::sleep_until(steady::now() + std::chrono::microseconds(interval_us));
  s.e2_uj = read_energy_uj(zone);
  s.delta_uj = wrap_delta_uj(s.e1_uj, s.e2_uj, zone.max_energy_range_uj);
  return s;
}

// --- LiveSource ---

LiveSource::LiveSource(const RaplZone& zone) : zone_(zone) {
  fd_ = ::open(zone.energy_path.c_str(), O_RDONLY);
  if (fd_ < 0) {
    if (errno == EACCES || errno == EPERM) {
      throw PermissionDenied("cannot open " + zone.energy_path.string() +
                             ": permission denied (admin privilege required)");
    }
    throw IoError("cannot open " + zone.energy_path.string() + ": " + std::strerror(errno));
  }
}

LiveSource::~LiveSource() {
  if (fd_ >= 0) ::close(fd_);
}

std::uint64_t LiveSource::read_counter() {
  // The handle stays open for the whole trace; re-read from offset zero.
  char buf[64];
  const ssize_t n = ::pread(fd_, buf, sizeof(buf) - 1, 0);
  if (n < 0) {
    throw IoError("read failed on " + zone_.energy_path.string() + ": " + std::strerror(errno));
  }
  return parse_counter(std::string_view(buf, static_cast<std::size_t>(n)), zone_.energy_path);
}

EnergySample LiveSource::next(std::uint64_t interval_us) {
  EnergySample s;
  s.seq = seq_++;
  if (!primed_) {
    s.e1_uj = read_counter();
    s.t_monotonic_ns = now_monotonic_ns();
    deadline_ = steady::now() + std::chrono::microseconds(interval_us);
  } else {
    // Consecutive readings: the previous sample's second read is this
    // sample's first, so the stream has no gaps.
    s.e1_uj = prev_uj_;
    s.t_monotonic_ns = prev_t_ns_;
  }
  std::this_thread::sleep_until(deadline_);
  deadline_ += std::chrono::microseconds(interval_us);  // absolute deadlines, no drift
  s.e2_uj = read_counter();
  prev_uj_ = s.e2_uj;
  prev_t_ns_ = now_monotonic_ns();
  primed_ = true;
  s.delta_uj = wrap_delta_uj(s.e1_uj, s.e2_uj, zone_.max_energy_range_uj);
  return s;
}

void LiveSource::reset() { primed_ = false; }

// --- ReplaySource ---

ReplaySource::ReplaySource(const fs::path& trace_csv, bool loop) : loop_(loop) {
  const traceio::EnergyTrace t = traceio::read_trace(trace_csv);
  domain_ = t.meta.domain;
  deltas_.reserve(t.deltas.size());
  for (double v : t.deltas) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw Error("replay file " + trace_csv.string() + " contains non-raw delta " +
                  std::to_string(v));
    }
    deltas_.push_back(static_cast<std::uint64_t>(std::llround(v)));
  }
}

EnergySample ReplaySource::next(std::uint64_t interval_us) {
  if (pos_ >= deltas_.size()) {
    if (!loop_) {
      throw SourceExhausted("replay source exhausted after " + std::to_string(deltas_.size()) +
                            " samples");
    }
    pos_ = 0;
  }
  EnergySample s;
  s.seq = seq_++;
  s.delta_uj = deltas_[pos_++];
  s.e1_uj = accumulated_uj_;
  accumulated_uj_ += s.delta_uj;
  s.e2_uj = accumulated_uj_;
  s.t_monotonic_ns = static_cast<std::uint64_t>(s.seq) * interval_us * 1000u;
  return s;
}

void ReplaySource::reset() {
  pos_ = 0;
  seq_ = 0;
  accumulated_uj_ = 0;
}

// --- SyntheticSource ---

SyntheticSpec parse_generator(const std::string& id) {
  if (id == "benign-noise") return SyntheticSpec{};
  if (id == "attack-burst") {
    SyntheticSpec s;
    s.kind = SyntheticSpec::Kind::AttackBurst;
    return s;
  }
  throw UnknownGenerator("unknown generator '" + id +
                         "'; expected benign-noise or attack-burst");
}

SyntheticSpec attack_variant(int variant) {
  if (variant < 0 || variant >= 15) {
    throw UnknownGenerator("attack variant out of range: " + std::to_string(variant));
  }
  SyntheticSpec s;
  s.kind = SyntheticSpec::Kind::AttackBurst;
  // Distinct burst shape per variant, loosely mimicking how different
  // attacks leave different marks on the energy trace.
  s.mean_uj = 2000.0 + 120.0 * (variant % 5);
  s.burst_amplitude_uj = 1600.0 + 420.0 * variant;
  s.burst_period = 18 + 6 * static_cast<std::size_t>(variant);
  return s;
}

SyntheticSource::SyntheticSource(const SyntheticSpec& spec, std::uint64_t seed)
    : spec_(spec), seed_(seed), rng_(seed), noise_(0.0, 1.0) {}

EnergySample SyntheticSource::next(std::uint64_t interval_us) {
  double level = spec_.mean_uj;
  if (spec_.kind == SyntheticSpec::Kind::AttackBurst &&
      (seq_ % spec_.burst_period) < spec_.burst_period / 2) {
    level += spec_.burst_amplitude_uj;
  }
  const double raw = level + spec_.sigma_uj * noise_(rng_);
  const std::uint64_t delta =
      raw <= 0.0 ? 0u : static_cast<std::uint64_t>(std::llround(raw));

  EnergySample s;
  s.seq = seq_++;
  s.delta_uj = delta;
  s.e1_uj = accumulated_uj_;
  accumulated_uj_ += delta;
  s.e2_uj = accumulated_uj_;
  s.t_monotonic_ns = static_cast<std::uint64_t>(s.seq) * interval_us * 1000u;
  return s;
}

void SyntheticSource::reset() {
  rng_.seed(seed_);
  noise_.reset();
  seq_ = 0;
  accumulated_uj_ = 0;
}

// --- collection ---

traceio::EnergyTrace collect_trace(SampleSource& source, const CollectorConfig& config) {
  config.validate();

  traceio::EnergyTrace trace;
  trace.deltas.reserve(config.samples_per_trace);
  trace.meta.domain = source.domain();
  trace.meta.nominal_interval_us = config.interval_us;
  trace.meta.captured_at = iso8601_utc_now();

  std::uint64_t first_t = 0;
  std::uint64_t last_t = 0;
  for (std::size_t j = 0; j < config.samples_per_trace; ++j) {
    const EnergySample s = source.next(config.interval_us);
    if (j == 0) {
      first_t = s.t_monotonic_ns;
    } else if (s.t_monotonic_ns <= last_t) {
      throw Error("non-monotonic sample timestamps within a trace");
    }
    last_t = s.t_monotonic_ns;
    trace.deltas.push_back(static_cast<double>(s.delta_uj));
  }
  if (config.samples_per_trace > 1) {
    trace.meta.achieved_period_us = static_cast<double>(last_t - first_t) /
                                    static_cast<double>(config.samples_per_trace - 1) / 1000.0;
  } else {
    trace.meta.achieved_period_us = static_cast<double>(config.interval_us);
  }
  return trace;
}

traceio::EnergyTrace synth_trace(const std::string& generator, std::uint64_t seed,
                                 std::size_t n_samples) {
  SyntheticSource source(parse_generator(generator), seed);
  CollectorConfig config;
  config.samples_per_trace = n_samples;
  config.measurements = 1;
  return collect_trace(source, config);
}

traceio::Dataset synthetic_dataset(int benign_classes, int attack_variants,
                                   std::size_t traces_per_class, std::size_t n_samples,
                                   std::uint64_t seed) {
  CollectorConfig config;
  config.samples_per_trace = n_samples;
  config.measurements = traces_per_class;
  config.inter_measurement_sleep = std::chrono::milliseconds(0);

  traceio::Dataset ds;
  std::uint64_t next_seed = seed;
  for (int b = 0; b < benign_classes; ++b) {
    char name[32];
    std::snprintf(name, sizeof(name), "synth-benign-%02d", b);
    SyntheticSpec spec;
    spec.mean_uj += 40.0 * b;
    SyntheticSource source(spec, next_seed++);
    for (auto& t : collect_campaign(source, config, traceio::benign_label(name), "", "")) {
      ds.add(std::move(t));
    }
  }
  for (int v = 0; v < attack_variants; ++v) {
    SyntheticSource source(attack_variant(v), next_seed++);
    const traceio::ClassLabel label = traceio::attack_label(traceio::attack_names()[v]);
    for (auto& t : collect_campaign(source, config, label, "", "")) {
      ds.add(std::move(t));
    }
  }
  return ds;
}

namespace {

void run_hook(const std::string& hook, std::size_t measurement, const char* phase) {
  if (hook.empty()) return;
  const int status = std::system(hook.c_str());
  if (status != 0) {
    throw HookFailed(measurement, std::string(phase) + " hook failed on measurement " +
                                      std::to_string(measurement) + " (command: " + hook + ")");
  }
}

}  // namespace

void collect_campaign(SampleSource& source, const CollectorConfig& config,
                      const traceio::ClassLabel& label, const std::string& start_hook,
                      const std::string& stop_hook, const TraceSink& sink) {
  config.validate();
  for (std::size_t i = 1; i <= config.measurements; ++i) {
    run_hook(start_hook, i, "start");
    traceio::EnergyTrace trace = collect_trace(source, config);
    trace.label = label;
    run_hook(stop_hook, i, "stop");
    // Delivered only after a clean stop; a failed hook voids the measurement.
    if (sink) sink(i, std::move(trace));
    if (i < config.measurements && config.inter_measurement_sleep.count() > 0) {
      std::this_thread::sleep_for(config.inter_measurement_sleep);
    }
  }
}

std::vector<traceio::EnergyTrace> collect_campaign(SampleSource& source,
                                                   const CollectorConfig& config,
                                                   const traceio::ClassLabel& label,
                                                   const std::string& start_hook,
                                                   const std::string& stop_hook) {
  std::vector<traceio::EnergyTrace> traces;
  collect_campaign(source, config, label, start_hook, stop_hook,
                   [&traces](std::size_t, traceio::EnergyTrace t) {
                     traces.push_back(std::move(t));
                   });
  return traces;
}

}  // namespace energuard::sensor
