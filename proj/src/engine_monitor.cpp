#include "energuard/engine/monitor.hpp"

#include <condition_variable>
#include <ctime>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <variant>

#include <json.hpp>

#include "energuard/models.hpp"

namespace energuard::engine {

using nlohmann::json;

namespace {

std::string iso8601_utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct WindowItem {
  std::uint64_t id = 0;
  traceio::EnergyTrace trace;
  std::string start_time;
  std::string end_time;
};
struct ErrorItem {
  std::uint64_t id = 0;
  std::string message;
};
struct EndItem {};
using QueueItem = std::variant<WindowItem, ErrorItem, EndItem>;

// Bounded FIFO between the sampler and the inference path. Blocking mode
// gives offline sources backpressure; live mode never blocks the producer
// and instead drops the oldest unprocessed window.
class WindowQueue {
 public:
  WindowQueue(std::size_t capacity, bool blocking)
      : capacity_(std::max<std::size_t>(1, capacity)), blocking_(blocking) {}

  // Returns the number of windows dropped to make room. The end marker
  // bypasses the capacity bound so shutdown never sheds a counted window.
  std::size_t push(QueueItem item) {
    const bool end_marker = std::holds_alternative<EndItem>(item);
    std::unique_lock lock(mu_);
    std::size_t dropped = 0;
    if (!end_marker) {
      if (blocking_) {
        not_full_.wait(lock, [&] { return items_.size() < capacity_; });
      } else {
        while (items_.size() >= capacity_) {
          auto victim = std::find_if(items_.begin(), items_.end(), [](const QueueItem& q) {
            return !std::holds_alternative<EndItem>(q);
          });
          if (victim == items_.end()) break;
          dropped += std::holds_alternative<WindowItem>(*victim) ? 1 : 0;
          items_.erase(victim);
        }
      }
    }
    items_.push_back(std::move(item));
    lock.unlock();
    not_empty_.notify_one();
    return dropped;
  }

  QueueItem pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty(); });
    QueueItem item = std::move(items_.front());
    items_.pop_front();
    lock.unlock();
    not_full_.notify_one();
    return item;
  }

 private:
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<QueueItem> items_;
  std::size_t capacity_;
  bool blocking_;
};

// Verdict/error sink; flushes after every record so operators can tail it.
class AlertWriter {
 public:
  explicit AlertWriter(const std::string& sink) {
    if (sink == "-") return;
    file_.open(sink, std::ios::binary | std::ios::app);
    if (!file_) throw SinkError("cannot open alert sink " + sink + " for writing");
  }

  void write_line(const std::string& line) {
    std::ostream& out = file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout;
    out << line << '\n';
    out.flush();
    if (!out) throw SinkError("failed writing alert record");
  }

 private:
  std::ofstream file_;
};

}  // namespace

std::string to_alert_line(const DetectionVerdict& v) {
  json j;
  j["window_id"] = v.window_id;
  j["timestamp"] = v.window_end;
  j["window_start"] = v.window_start;
  j["verdict"] = v.anomaly ? "anomaly" : "benign";
  j["ad_score"] = v.ad_score;
  if (v.attack) {
    j["attack"] = v.attack->name;
    j["attack_index"] = v.attack->attack_index;
    j["confidence"] = v.attack->confidence;
  }
  return j.dump();
}

DetectionVerdict parse_alert_line(const std::string& line) {
  const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw FormatError(1, "invalid alert record: " + line);
  DetectionVerdict v;
  v.window_id = j.at("window_id").get<std::uint64_t>();
  v.window_end = j.value("timestamp", "");
  v.window_start = j.value("window_start", "");
  v.anomaly = j.value("verdict", "benign") == "anomaly";
  v.ad_score = j.value("ad_score", 0.0);
  if (j.contains("attack")) {
    v.attack = AttackId{j["attack"].get<std::string>(), j.value("attack_index", -1),
                        j.value("confidence", 0.0)};
  }
  return v;
}

MonitorStats run_monitor(const MonitorConfig& config, sensor::SampleSource& source,
                         const VerdictCallback& on_verdict) {
  models::TrainedModel ad = models::load_model(config.ad_model);
  if (ad.task != "ad") throw Error(config.ad_model.string() + " is not a detector model");

  std::optional<models::TrainedModel> ar;
  if (!config.ar_model.empty()) {
    ar = models::load_model(config.ar_model);
    if (ar->task != "ar") throw Error(config.ar_model.string() + " is not a recognizer model");
    if (ar->net.input_length() != ad.net.input_length()) {
      throw LengthMismatch("recognizer input length " + std::to_string(ar->net.input_length()) +
                           " does not match detector input " +
                           std::to_string(ad.net.input_length()));
    }
  }
  if (!config.standardizer.empty()) {
    const traceio::Standardizer s = traceio::load_standardizer(config.standardizer);
    ad.standardizer = s;
    if (ar) ar->standardizer = s;
  }

  const std::size_t n_samples = config.n_samples ? config.n_samples : ad.net.input_length();
  if (n_samples != ad.net.input_length()) {
    throw LengthMismatch("window size " + std::to_string(n_samples) +
                         " does not match detector input " +
                         std::to_string(ad.net.input_length()));
  }

  AlertWriter alerts(config.alert_sink);

  sensor::CollectorConfig collector;
  collector.interval_us = config.interval_us;
  collector.samples_per_trace = n_samples;
  collector.measurements = 1;
  collector.inter_measurement_sleep = std::chrono::milliseconds(0);

  WindowQueue queue(config.queue_capacity, /*blocking=*/source.offline());
  MonitorStats stats;
  std::atomic<std::uint64_t> dropped{0};
  std::atomic<bool> abort{false};

  std::thread producer([&] {
    std::uint64_t id = 0;
    while (!abort.load() && !(config.stop && config.stop->load()) &&
           (config.max_windows == 0 || id < config.max_windows)) {
      WindowItem item;
      item.id = id;
      item.start_time = iso8601_utc_now();
      try {
        item.trace = sensor::collect_trace(source, collector);
      } catch (const SourceExhausted&) {
        break;  // clean end of an offline stream; a partial window is discarded
      } catch (const std::exception& e) {
        dropped += queue.push(ErrorItem{id++, e.what()});
        continue;
      }
      item.end_time = iso8601_utc_now();
      dropped += queue.push(std::move(item));
      ++id;
    }
    queue.push(EndItem{});
  });

  try {
    for (;;) {
      QueueItem item = queue.pop();
      if (std::holds_alternative<EndItem>(item)) break;

      if (auto* err = std::get_if<ErrorItem>(&item)) {
        ++stats.sampling_errors;
        json j;
        j["window_id"] = err->id;
        j["error"] = err->message;
        j["timestamp"] = iso8601_utc_now();
        alerts.write_line(j.dump());
        continue;
      }

      WindowItem& window = std::get<WindowItem>(item);
      DetectionVerdict verdict;
      verdict.window_id = window.id;
      verdict.window_start = window.start_time;
      verdict.window_end = window.end_time;
      verdict.ad_score = models::infer_ad(ad, window.trace);
      verdict.anomaly = verdict.ad_score >= config.threshold;
      ++stats.windows;
      if (verdict.anomaly) {
        ++stats.anomalies;
        if (ar) {
          // Conditional path: the recognizer sees the same window.
          ++stats.ar_invocations;
          const std::vector<double> dist = models::infer_ar(*ar, window.trace);
          const std::size_t best = static_cast<std::size_t>(
              std::max_element(dist.begin(), dist.end()) - dist.begin());
          verdict.attack = AttackId{ar->class_names.at(best), static_cast<int>(best), dist[best]};
        }
      }
      alerts.write_line(to_alert_line(verdict));
      if (on_verdict) on_verdict(verdict);
    }
  } catch (...) {
    abort.store(true);
    // Drain so the producer can never be stuck on a full blocking queue.
    std::thread drain([&] {
      while (!std::holds_alternative<EndItem>(queue.pop())) {
      }
    });
    producer.join();
    queue.push(EndItem{});
    drain.join();
    throw;
  }

  producer.join();
  stats.dropped_windows = dropped.load();
  return stats;
}

}  // namespace energuard::engine
