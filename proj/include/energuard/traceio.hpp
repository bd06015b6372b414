#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "energuard/power_domain.hpp"

namespace energuard::traceio {

enum class Family { Benign, Attack };

constexpr std::string_view to_string(Family f) {
  return f == Family::Benign ? "benign" : "attack";
}

// The 15 attack variants the recognizer distinguishes, in canonical order.
// attack_index is a position in this list.
const std::array<std::string, 15>& attack_names();
std::optional<int> attack_index_of(std::string_view name);

struct ClassLabel {
  Family family = Family::Benign;
  std::string name;                 // e.g. "aobench", "spectre-v1"
  std::optional<int> attack_index;  // present iff family == Attack

  bool operator==(const ClassLabel&) const = default;
};

ClassLabel benign_label(std::string name);
ClassLabel attack_label(std::string name);  // throws UnknownAttackName

// Family-qualified key used to index classes: "benign/aobench".
std::string class_key(const ClassLabel& label);

struct TraceMeta {
  PowerDomain domain = PowerDomain::PP0;
  std::uint64_t nominal_interval_us = 500;
  std::string captured_at;          // ISO-8601 UTC, empty if unknown
  double achieved_period_us = 0.0;  // measured mean inter-sample period

  bool operator==(const TraceMeta&) const = default;
};

// One recorded measurement: per-interval energy-counter deltas in microjoules.
struct EnergyTrace {
  std::vector<double> deltas;
  ClassLabel label;
  TraceMeta meta;
};

// Canonical on-disk form: a CSV with header "delta_uj" and one value per
// row, plus a sibling "<stem>.meta.json" carrying label and capture
// metadata. read(write(t)) reproduces t exactly, metadata included.
void write_trace(const EnergyTrace& trace, const std::filesystem::path& csv_path);
EnergyTrace read_trace(const std::filesystem::path& csv_path);

struct Dataset {
  std::vector<EnergyTrace> traces;
  std::map<std::string, std::vector<std::size_t>> class_index;  // class_key -> indices

  void add(EnergyTrace trace);
  void rebuild_index();
  std::size_t size() const { return traces.size(); }
  std::size_t min_trace_length() const;
  std::size_t count_of(Family family) const;
};

// Layout: <root>/{benign|attack}/<class-name>/*.csv
Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const Dataset& ds, const std::filesystem::path& root);

struct SplitSpec {
  int train_per_class = 40;
  int val_per_class = 10;
  std::uint64_t seed = 0;
};

// Deterministic per-class split with exact counts; train and val are disjoint.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// Keep the first n_samples values of every trace.
Dataset truncate(const Dataset& ds, std::size_t n_samples);

// Pooled standardization statistics, fit on training data only.
struct Standardizer {
  double mean = 0.0;
  double stddev = 1.0;
};

Standardizer fit_standardizer(const Dataset& train);
std::vector<double> apply(const Standardizer& s, const std::vector<double>& deltas);
Dataset apply(const Standardizer& s, const Dataset& ds);

void save_standardizer(const Standardizer& s, const std::filesystem::path& path);
Standardizer load_standardizer(const std::filesystem::path& path);

}  // namespace energuard::traceio
