#include "energuard/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace energuard::metrics {

ConfusionMatrix ConfusionMatrix::from(const std::vector<int>& truth,
                                      const std::vector<int>& predicted, std::size_t k) {
  if (truth.size() != predicted.size()) {
    throw LengthMismatch("truth and prediction lengths differ: " + std::to_string(truth.size()) +
                         " vs " + std::to_string(predicted.size()));
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k) {
      throw LengthMismatch("class id out of range for " + std::to_string(k) + " classes");
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_total(std::size_t t) const {
  std::uint64_t n = 0;
  for (std::size_t p = 0; p < k_; ++p) n += at(t, p);
  return n;
}

std::uint64_t ConfusionMatrix::col_total(std::size_t p) const {
  std::uint64_t n = 0;
  for (std::size_t t = 0; t < k_; ++t) n += at(t, p);
  return n;
}

std::string ConfusionMatrix::to_csv() const {
  std::string out;
  for (std::size_t t = 0; t < k_; ++t) {
    for (std::size_t p = 0; p < k_; ++p) {
      if (p) out += ',';
      out += std::to_string(at(t, p));
    }
    out += '\n';
  }
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t n = cm.total();
  if (n == 0) return 0.0;
  std::uint64_t hit = 0;
  for (std::size_t i = 0; i < cm.classes(); ++i) hit += cm.at(i, i);
  return static_cast<double>(hit) / static_cast<double>(n);
}

double f1(const ConfusionMatrix& cm, std::size_t positive) {
  if (cm.classes() != 2) throw NotBinary("f1 requires a 2x2 confusion matrix");
  const std::size_t negative = 1 - positive;
  const double tp = static_cast<double>(cm.at(positive, positive));
  const double fp = static_cast<double>(cm.at(negative, positive));
  const double fn = static_cast<double>(cm.at(positive, negative));
  const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::pair<double, double> fpr_fnr(const ConfusionMatrix& cm, std::size_t positive) {
  if (cm.classes() != 2) throw NotBinary("fpr/fnr require a 2x2 confusion matrix");
  const std::size_t negative = 1 - positive;
  const double tp = static_cast<double>(cm.at(positive, positive));
  const double fp = static_cast<double>(cm.at(negative, positive));
  const double fn = static_cast<double>(cm.at(positive, negative));
  const double tn = static_cast<double>(cm.at(negative, negative));
  const double fpr = fp + tn > 0.0 ? fp / (fp + tn) : 0.0;
  const double fnr = fn + tp > 0.0 ? fn / (fn + tp) : 0.0;
  return {fpr, fnr};
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth) {
  if (scores.size() != truth.size()) {
    throw LengthMismatch("scores and truth lengths differ");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int t : truth) n_pos += t != 0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw SingleClassTruth("roc_auc requires both classes in the truth vector");
  }

  // Rank-based Mann-Whitney with average ranks for ties.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (truth[order[k]] != 0) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalReport build_report(const std::vector<int>& truth, const std::vector<int>& predicted,
                        const std::vector<double>& scores, std::size_t num_classes,
                        const std::vector<std::string>& class_names, std::string model_id,
                        std::size_t n_samples) {
  if (truth.empty()) throw EmptyDataset("cannot build a report from an empty evaluation");

  EvalReport report;
  report.model_id = std::move(model_id);
  report.n_samples = n_samples;
  report.confusion = ConfusionMatrix::from(truth, predicted, num_classes);
  report.accuracy = accuracy(report.confusion);

  for (std::size_t c = 0; c < num_classes; ++c) {
    PerClass pc;
    pc.name = c < class_names.size() ? class_names[c] : "class-" + std::to_string(c);
    const double tp = static_cast<double>(report.confusion.at(c, c));
    const double row = static_cast<double>(report.confusion.row_total(c));
    const double col = static_cast<double>(report.confusion.col_total(c));
    pc.support = report.confusion.row_total(c);
    pc.precision = col > 0.0 ? tp / col : 0.0;
    pc.recall = row > 0.0 ? tp / row : 0.0;
    if (col == 0.0 || row == 0.0) report.zero_denominator = true;
    report.per_class.push_back(std::move(pc));
  }

  if (num_classes == 2) {
    report.f1 = f1(report.confusion);
    const auto [fpr, fnr] = fpr_fnr(report.confusion);
    report.fpr = fpr;
    report.fnr = fnr;
    if (!scores.empty()) {
      bool has_pos = false;
      bool has_neg = false;
      for (int t : truth) {
        if (t != 0) {
          has_pos = true;
        } else {
          has_neg = true;
        }
      }
      if (has_pos && has_neg) {
        report.auc = roc_auc(scores, truth);
      } else {
        report.zero_denominator = true;
      }
    }
  }
  return report;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  char buf[64];
  const auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    out << key << ' ' << buf << '\n';
  };
  out << "model " << model_id << '\n';
  out << "n_samples " << n_samples << '\n';
  out << "evaluated " << confusion.total() << '\n';
  line("accuracy", accuracy);
  if (f1) line("f1", *f1);
  if (auc) line("auc", *auc);
  if (fpr) line("fpr", *fpr);
  if (fnr) line("fnr", *fnr);
  out << "zero_denominator " << (zero_denominator ? 1 : 0) << '\n';
  for (const PerClass& pc : per_class) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %llu", pc.precision, pc.recall,
                  static_cast<unsigned long long>(pc.support));
    out << "class " << pc.name << ' ' << buf << '\n';
  }
  return out.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["model"] = model_id;
  j["n_samples"] = n_samples;
  j["evaluated"] = confusion.total();
  j["accuracy"] = accuracy;
  if (f1) j["f1"] = *f1;
  if (auc) j["auc"] = *auc;
  if (fpr) j["fpr"] = *fpr;
  if (fnr) j["fnr"] = *fnr;
  j["zero_denominator"] = zero_denominator;
  nlohmann::json classes = nlohmann::json::array();
  for (const PerClass& pc : per_class) {
    classes.push_back({{"name", pc.name},
                       {"precision", pc.precision},
                       {"recall", pc.recall},
                       {"support", pc.support}});
  }
  j["per_class"] = classes;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < confusion.classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < confusion.classes(); ++p) row.push_back(confusion.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j;
}

void write_report(const EvalReport& report, const std::filesystem::path& json_path) {
  std::ofstream f(json_path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + json_path.string() + " for writing");
  f << report.to_json().dump(2) << '\n';
}

}  // namespace energuard::metrics
