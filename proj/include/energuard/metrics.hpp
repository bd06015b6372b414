#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "energuard/errors.hpp"

namespace energuard::metrics {

// K x K counts; row = true class, column = predicted class.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

  static ConfusionMatrix from(const std::vector<int>& truth, const std::vector<int>& predicted,
                              std::size_t k);

  std::uint64_t& at(std::size_t true_class, std::size_t predicted_class) {
    return counts_[true_class * k_ + predicted_class];
  }
  std::uint64_t at(std::size_t true_class, std::size_t predicted_class) const {
    return counts_[true_class * k_ + predicted_class];
  }

  std::size_t classes() const { return k_; }
  std::uint64_t total() const;
  std::uint64_t row_total(std::size_t true_class) const;
  std::uint64_t col_total(std::size_t predicted_class) const;

  std::string to_csv() const;

 private:
  std::size_t k_ = 0;
  std::vector<std::uint64_t> counts_;
};

double accuracy(const ConfusionMatrix& cm);

// F1 on the positive class of a binary matrix; 0 when precision+recall = 0.
double f1(const ConfusionMatrix& cm, std::size_t positive = 1);

// (FPR, FNR) with positive = anomaly; zero-denominator rates are 0.
std::pair<double, double> fpr_fnr(const ConfusionMatrix& cm, std::size_t positive = 1);

// Mann-Whitney AUC: fraction of (positive, negative) pairs where the
// positive outscores the negative, ties counted 1/2. Equals the
// trapezoidal area under the ROC curve.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth);

struct PerClass {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  std::string model_id;
  std::size_t n_samples = 0;  // input length the model consumed
  double accuracy = 0.0;
  std::optional<double> f1;   // binary (AD) reports only
  std::optional<double> auc;
  std::optional<double> fpr;
  std::optional<double> fnr;
  std::vector<PerClass> per_class;
  ConfusionMatrix confusion;
  bool zero_denominator = false;  // some rate had an empty denominator

  std::string to_text() const;
  nlohmann::json to_json() const;
};

// Assemble a report from raw predictions. `scores` (anomaly scores) may be
// empty; AUC/F1/FPR/FNR are filled only for binary problems.
EvalReport build_report(const std::vector<int>& truth, const std::vector<int>& predicted,
                        const std::vector<double>& scores, std::size_t num_classes,
                        const std::vector<std::string>& class_names, std::string model_id,
                        std::size_t n_samples);

void write_report(const EvalReport& report, const std::filesystem::path& json_path);

}  // namespace energuard::metrics
