#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "energuard/errors.hpp"
#include "energuard/traceio.hpp"
#include "test_helpers.hpp"

using namespace energuard;
using energuard::testing::TempDir;
using energuard::testing::make_trace;
using energuard::testing::write_file;

TEST_CASE("attack name table has 15 entries in canonical order") {
  REQUIRE(traceio::attack_names().size() == 15);
  CHECK(traceio::attack_names().front() == "flush-flush");
  CHECK(traceio::attack_names().back() == "bhi");
  CHECK(*traceio::attack_index_of("spectre-v1") == 3);
  CHECK(!traceio::attack_index_of("not-a-real-attack"));
  CHECK_THROWS_AS(traceio::attack_label("not-a-real-attack"), UnknownAttackName);
}

TEST_CASE("trace write/read round trip preserves samples and metadata") {
  TempDir tmp;
  auto t = make_trace({1, 2, 3}, traceio::attack_label("spectre-v1"));
  t.meta.domain = PowerDomain::PP0;
  t.meta.nominal_interval_us = 500;
  t.meta.achieved_period_us = 512.375;

  const auto path = tmp.path / "trace_000.csv";
  traceio::write_trace(t, path);
  const auto back = traceio::read_trace(path);

  CHECK(back.deltas == t.deltas);
  CHECK(back.label == t.label);
  CHECK(back.meta == t.meta);
}

TEST_CASE("trace round trip is exact at full floating precision") {
  TempDir tmp;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> deltas;
  for (int i = 0; i < 200; ++i) deltas.push_back(u(rng));
  deltas.push_back(0.1 + 0.2);  // classic non-representable sum

  const auto path = tmp.path / "t.csv";
  traceio::write_trace(make_trace(deltas), path);
  const auto back = traceio::read_trace(path);
  REQUIRE(back.deltas.size() == deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) CHECK(back.deltas[i] == deltas[i]);
}

TEST_CASE("read_trace rejects malformed files with line numbers") {
  TempDir tmp;

  write_file(tmp.path / "nohdr.csv", "123\n456\n");
  CHECK_THROWS_AS(traceio::read_trace(tmp.path / "nohdr.csv"), FormatError);
  try {
    traceio::read_trace(tmp.path / "nohdr.csv");
  } catch (const FormatError& e) {
    CHECK(e.line == 1);
  }

  write_file(tmp.path / "bad.csv", "delta_uj\n100\nabc\n");
  try {
    traceio::read_trace(tmp.path / "bad.csv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line == 3);
  }

  write_file(tmp.path / "empty.csv", "");
  CHECK_THROWS_AS(traceio::read_trace(tmp.path / "empty.csv"), FormatError);
}

TEST_CASE("a 3000-row file loads as a 3000-sample trace") {
  TempDir tmp;
  std::string body = "delta_uj\n";
  for (int i = 0; i < 3000; ++i) body += std::to_string(1000 + i % 7) + "\n";
  write_file(tmp.path / "t.csv", body);
  CHECK(traceio::read_trace(tmp.path / "t.csv").deltas.size() == 3000);
}

TEST_CASE("load_dataset infers labels from the directory layout") {
  TempDir tmp;
  traceio::Dataset ds;
  ds.add(make_trace({1, 2}, traceio::benign_label("aobench")));
  ds.add(make_trace({3, 4}, traceio::benign_label("aobench")));
  ds.add(make_trace({5, 6}, traceio::attack_label("spectre-v1")));
  ds.add(make_trace({7, 8}, traceio::attack_label("spectre-v1")));
  traceio::save_dataset(ds, tmp.path / "ds");

  const auto loaded = traceio::load_dataset(tmp.path / "ds");
  REQUIRE(loaded.traces.size() == 4);
  REQUIRE(loaded.class_index.size() == 2);
  CHECK(loaded.class_index.count("benign/aobench") == 1);
  CHECK(loaded.class_index.count("attack/spectre-v1") == 1);
  for (const auto& t : loaded.traces) {
    if (t.label.family == traceio::Family::Attack) CHECK(*t.label.attack_index == 3);
  }
}

TEST_CASE("load_dataset errors") {
  TempDir tmp;

  SUBCASE("empty root") {
    std::filesystem::create_directories(tmp.path / "empty");
    CHECK_THROWS_AS(traceio::load_dataset(tmp.path / "empty"), EmptyDataset);
  }
  SUBCASE("unknown attack name") {
    write_file(tmp.path / "ds" / "attack" / "not-a-real-attack" / "trace_000.csv",
               "delta_uj\n1\n");
    CHECK_THROWS_AS(traceio::load_dataset(tmp.path / "ds"), UnknownAttackName);
  }
  SUBCASE("class directory with no traces") {
    std::filesystem::create_directories(tmp.path / "ds" / "benign" / "hollow");
    write_file(tmp.path / "ds" / "benign" / "real" / "trace_000.csv", "delta_uj\n1\n");
    CHECK_THROWS_AS(traceio::load_dataset(tmp.path / "ds"), EmptyClass);
  }
}

namespace {

traceio::Dataset per_class_dataset(int classes, int per_class, int len = 4) {
  traceio::Dataset ds;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::vector<double> d(len, c * 100.0 + i);
      ds.add(make_trace(std::move(d), traceio::benign_label("app-" + std::to_string(c))));
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("split produces exact per-class counts, disjoint and deterministic") {
  const auto ds = per_class_dataset(3, 50);
  const traceio::SplitSpec spec{40, 10, 7};
  auto [train, val] = traceio::split(ds, spec);

  for (const auto& [key, idx] : train.class_index) CHECK(idx.size() == 40);
  for (const auto& [key, idx] : val.class_index) CHECK(idx.size() == 10);
  CHECK(train.traces.size() == 120);
  CHECK(val.traces.size() == 30);

  // Disjoint: the first delta value identifies each source trace uniquely.
  std::set<double> train_ids;
  for (const auto& t : train.traces) train_ids.insert(t.deltas[0]);
  for (const auto& t : val.traces) CHECK(train_ids.count(t.deltas[0]) == 0);

  // Same seed, same membership; a different seed keeps the counts.
  auto [train2, val2] = traceio::split(ds, spec);
  for (std::size_t i = 0; i < train.traces.size(); ++i) {
    CHECK(train.traces[i].deltas == train2.traces[i].deltas);
  }
  auto [train3, val3] = traceio::split(ds, traceio::SplitSpec{40, 10, 8});
  CHECK(train3.traces.size() == 120);
  CHECK(val3.traces.size() == 30);
}

TEST_CASE("split rejects classes with too few traces") {
  const auto ds = per_class_dataset(2, 2);
  CHECK_THROWS_AS(traceio::split(ds, traceio::SplitSpec{40, 10, 0}), InsufficientTraces);
  auto [train, val] = traceio::split(ds, traceio::SplitSpec{1, 1, 0});
  CHECK(train.traces.size() == 2);
  CHECK(val.traces.size() == 2);
}

TEST_CASE("truncate keeps the trace prefix") {
  traceio::Dataset ds;
  std::vector<double> d(3000);
  for (int i = 0; i < 3000; ++i) d[i] = i;
  ds.add(make_trace(d));

  const auto cut = traceio::truncate(ds, 500);
  REQUIRE(cut.traces[0].deltas.size() == 500);
  CHECK(cut.traces[0].deltas.front() == 0.0);
  CHECK(cut.traces[0].deltas.back() == 499.0);

  CHECK(traceio::truncate(ds, 3000).traces[0].deltas == d);
  CHECK_THROWS_AS(traceio::truncate(ds, 3001), TooShort);

  // truncate(truncate(d, n), m) == truncate(d, m) for m <= n
  const auto a = traceio::truncate(traceio::truncate(ds, 1000), 200);
  const auto b = traceio::truncate(ds, 200);
  CHECK(a.traces[0].deltas == b.traces[0].deltas);
}

TEST_CASE("standardizer matches the hand-computed pooled statistics") {
  traceio::Dataset train;
  train.add(make_trace({0, 2}));
  train.add(make_trace({2, 4}));

  const auto s = traceio::fit_standardizer(train);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.stddev == doctest::Approx(std::sqrt(2.0)));  // population std of {0,2,2,4}

  const auto out = traceio::apply(s, std::vector<double>{2.0, 2.0});
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == doctest::Approx(0.0));
}

TEST_CASE("standardized training set pools to mean 0, std 1") {
  traceio::Dataset train;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(2000.0, 300.0);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> v(100);
    for (auto& x : v) x = d(rng);
    train.add(make_trace(std::move(v)));
  }
  const auto s = traceio::fit_standardizer(train);
  const auto std_train = traceio::apply(s, train);

  double sum = 0.0;
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& t : std_train.traces) {
    for (double v : t.deltas) {
      sum += v;
      ss += v * v;
      ++n;
    }
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(std::sqrt(ss / n - mean * mean) - 1.0) < 1e-6);
}

TEST_CASE("standardizer edge cases and inversion") {
  traceio::Dataset constant;
  constant.add(make_trace({5, 5, 5}));
  CHECK_THROWS_AS(traceio::fit_standardizer(constant), DegenerateData);

  const traceio::Standardizer s{100.0, 7.0};
  const std::vector<double> original{93.0, 100.0, 114.5};
  const auto transformed = traceio::apply(s, original);
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(transformed[i] * s.stddev + s.mean == doctest::Approx(original[i]));
  }
  // Applying twice is not the identity; pipelines must standardize once.
  const auto twice = traceio::apply(s, transformed);
  CHECK(twice[1] != doctest::Approx(transformed[1]).epsilon(1e-12));
}

TEST_CASE("standardizer persists through its JSON file") {
  TempDir tmp;
  traceio::save_standardizer(traceio::Standardizer{123.25, 17.5}, tmp.path / "s.json");
  const auto s = traceio::load_standardizer(tmp.path / "s.json");
  CHECK(s.mean == 123.25);
  CHECK(s.stddev == 17.5);
}
