#include "energuard/traceio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "energuard/errors.hpp"

namespace energuard::traceio {

namespace fs = std::filesystem;
using nlohmann::json;

const std::array<std::string, 15>& attack_names() {
  static const std::array<std::string, 15> names = {
      "flush-flush",  "flush-reload", "prime-probe", "spectre-v1", "spectre-v2",
      "spectre-v3",   "spectre-v4",   "portsmash",   "tlbleed",    "zombieload",
      "medusa-v1",    "medusa-v2",    "medusa-v3",   "fallout",    "bhi",
  };
  return names;
}

std::optional<int> attack_index_of(std::string_view name) {
  const auto& names = attack_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

ClassLabel benign_label(std::string name) {
  return ClassLabel{Family::Benign, std::move(name), std::nullopt};
}

ClassLabel attack_label(std::string name) {
  auto idx = attack_index_of(name);
  if (!idx) {
    throw UnknownAttackName("unknown attack class '" + name +
                            "'; expected one of the 15 canonical attack names");
  }
  return ClassLabel{Family::Attack, std::move(name), idx};
}

std::string class_key(const ClassLabel& label) {
  return std::string(to_string(label.family)) + "/" + label.name;
}

namespace {

// Integral deltas are written as plain integers; anything else (e.g.
// standardized values) with enough digits to round-trip a double.
void format_value(std::string& out, double v) {
  double integral = 0.0;
  if (std::modf(v, &integral) == 0.0 && std::abs(v) < 9.0e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    out += buf;
  } else {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
  }
}

fs::path meta_path_for(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension();
  p += ".meta.json";
  return p;
}

json label_to_json(const ClassLabel& label) {
  json j;
  j["family"] = std::string(to_string(label.family));
  j["name"] = label.name;
  if (label.attack_index) j["attack_index"] = *label.attack_index;
  return j;
}

ClassLabel label_from_json(const json& j) {
  ClassLabel label;
  label.family = j.value("family", "benign") == "attack" ? Family::Attack : Family::Benign;
  label.name = j.value("name", "");
  if (j.contains("attack_index")) label.attack_index = j["attack_index"].get<int>();
  return label;
}

}  // namespace

void write_trace(const EnergyTrace& trace, const fs::path& csv_path) {
  std::string body = "delta_uj\n";
  body.reserve(body.size() + trace.deltas.size() * 8);
  for (double v : trace.deltas) {
    format_value(body, v);
    body += '\n';
  }

  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot open " + csv_path.string() + " for writing");
  csv << body;
  if (!csv.flush()) throw IoError("failed writing " + csv_path.string());

  json meta;
  meta["domain"] = std::string(to_string(trace.meta.domain));
  meta["nominal_interval_us"] = trace.meta.nominal_interval_us;
  meta["captured_at"] = trace.meta.captured_at;
  meta["achieved_period_us"] = trace.meta.achieved_period_us;
  meta["label"] = label_to_json(trace.label);

  std::ofstream mf(meta_path_for(csv_path), std::ios::binary | std::ios::trunc);
  if (!mf) throw IoError("cannot open " + meta_path_for(csv_path).string() + " for writing");
  mf << meta.dump(2) << '\n';
}

EnergyTrace read_trace(const fs::path& csv_path) {
  std::ifstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError("cannot open " + csv_path.string());

  EnergyTrace trace;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(csv, line)) throw FormatError(1, csv_path.string() + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "delta_uj") {
    throw FormatError(1, csv_path.string() + ": expected header 'delta_uj', got '" + line + "'");
  }

  while (std::getline(csv, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* begin = line.data();
    const char* end = begin + line.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
      throw FormatError(line_no, csv_path.string() + ":" + std::to_string(line_no) +
                                     ": malformed value '" + line + "'");
    }
    trace.deltas.push_back(v);
  }
  if (trace.deltas.empty()) {
    throw FormatError(line_no, csv_path.string() + ": no samples");
  }

  const fs::path mp = meta_path_for(csv_path);
  if (fs::exists(mp)) {
    std::ifstream mf(mp, std::ios::binary);
    json meta = json::parse(mf, nullptr, /*allow_exceptions=*/false);
    if (meta.is_discarded()) throw FormatError(1, mp.string() + ": invalid JSON");
    if (auto d = power_domain_from_string(meta.value("domain", "pp0"))) trace.meta.domain = *d;
    trace.meta.nominal_interval_us = meta.value("nominal_interval_us", std::uint64_t{500});
    trace.meta.captured_at = meta.value("captured_at", "");
    trace.meta.achieved_period_us = meta.value("achieved_period_us", 0.0);
    if (meta.contains("label")) trace.label = label_from_json(meta["label"]);
  }
  return trace;
}

void Dataset::add(EnergyTrace trace) {
  const std::string key = class_key(trace.label);
  class_index[key].push_back(traces.size());
  traces.push_back(std::move(trace));
}

void Dataset::rebuild_index() {
  class_index.clear();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    class_index[class_key(traces[i].label)].push_back(i);
  }
}

std::size_t Dataset::min_trace_length() const {
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& t : traces) n = std::min(n, t.deltas.size());
  return traces.empty() ? 0 : n;
}

std::size_t Dataset::count_of(Family family) const {
  std::size_t n = 0;
  for (const auto& t : traces) n += t.label.family == family ? 1 : 0;
  return n;
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");

  Dataset ds;
  for (Family family : {Family::Benign, Family::Attack}) {
    const fs::path family_dir = root / std::string(to_string(family));
    if (!fs::is_directory(family_dir)) continue;

    std::vector<fs::path> class_dirs;
    for (const auto& e : fs::directory_iterator(family_dir)) {
      if (e.is_directory()) class_dirs.push_back(e.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());

    for (const auto& class_dir : class_dirs) {
      const std::string name = class_dir.filename().string();
      ClassLabel label = family == Family::Attack ? attack_label(name) : benign_label(name);

      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(class_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw EmptyClass("class directory " + class_dir.string() + " has no traces");

      for (const auto& f : files) {
        EnergyTrace t = read_trace(f);
        t.label = label;  // directory layout is authoritative for labels
        ds.add(std::move(t));
      }
    }
  }
  if (ds.traces.empty()) throw EmptyDataset("no traces found under " + root.string());
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  std::map<std::string, std::size_t> counters;
  for (const auto& t : ds.traces) {
    const fs::path dir = root / std::string(to_string(t.label.family)) / t.label.name;
    fs::create_directories(dir);
    const std::size_t n = counters[class_key(t.label)]++;
    char name[32];
    std::snprintf(name, sizeof(name), "trace_%03zu.csv", n);
    write_trace(t, dir / name);
  }
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (spec.train_per_class < 0 || spec.val_per_class < 0 || spec.train_per_class + spec.val_per_class < 1) {
    throw Error("split spec must request at least one trace per class");
  }
  const std::size_t need = static_cast<std::size_t>(spec.train_per_class + spec.val_per_class);

  Dataset train;
  Dataset val;
  std::mt19937_64 rng(spec.seed);
  // class_index is an ordered map, so iteration order (and therefore the
  // random stream consumed per class) is stable for a given dataset.
  for (const auto& [key, indices] : ds.class_index) {
    if (indices.size() < need) {
      throw InsufficientTraces(key, "class " + key + " has " + std::to_string(indices.size()) +
                                        " traces, split needs " + std::to_string(need));
    }
    std::vector<std::size_t> order = indices;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < spec.train_per_class; ++i) train.add(ds.traces[order[i]]);
    for (int i = 0; i < spec.val_per_class; ++i) {
      val.add(ds.traces[order[spec.train_per_class + i]]);
    }
  }
  return {std::move(train), std::move(val)};
}

Dataset truncate(const Dataset& ds, std::size_t n_samples) {
  if (n_samples == 0) throw Error("truncate requires n_samples >= 1");
  Dataset out;
  for (std::size_t i = 0; i < ds.traces.size(); ++i) {
    const EnergyTrace& t = ds.traces[i];
    if (t.deltas.size() < n_samples) {
      throw TooShort(i, "trace " + std::to_string(i) + " has " + std::to_string(t.deltas.size()) +
                            " samples, need " + std::to_string(n_samples));
    }
    EnergyTrace cut = t;
    cut.deltas.resize(n_samples);
    out.add(std::move(cut));
  }
  return out;
}

Standardizer fit_standardizer(const Dataset& train) {
  if (train.traces.empty()) throw EmptyDataset("cannot fit standardizer on an empty dataset");

  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : train.traces) {
    sum = std::accumulate(t.deltas.begin(), t.deltas.end(), sum);
    n += t.deltas.size();
  }
  const double mean = sum / static_cast<double>(n);

  double ss = 0.0;
  for (const auto& t : train.traces) {
    for (double v : t.deltas) ss += (v - mean) * (v - mean);
  }
  const double stddev = std::sqrt(ss / static_cast<double>(n));  // population std
  if (stddev == 0.0) throw DegenerateData("training data is constant; standard deviation is zero");
  return Standardizer{mean, stddev};
}

std::vector<double> apply(const Standardizer& s, const std::vector<double>& deltas) {
  std::vector<double> out(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) out[i] = (deltas[i] - s.mean) / s.stddev;
  return out;
}

Dataset apply(const Standardizer& s, const Dataset& ds) {
  Dataset out;
  for (const auto& t : ds.traces) {
    EnergyTrace st = t;
    st.deltas = apply(s, t.deltas);
    out.add(std::move(st));
  }
  return out;
}

void save_standardizer(const Standardizer& s, const fs::path& path) {
  json j;
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
}

Standardizer load_standardizer(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  json j = json::parse(f, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.contains("mean") || !j.contains("stddev")) {
    throw FormatError(1, path.string() + ": not a standardizer file");
  }
  return Standardizer{j["mean"].get<double>(), j["stddev"].get<double>()};
}

}  // namespace energuard::traceio
