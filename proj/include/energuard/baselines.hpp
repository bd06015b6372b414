#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "energuard/errors.hpp"

namespace energuard::baselines {

// Row-major feature matrix shared by both baseline models.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  const double* row(std::size_t i) const { return values.data() + i * cols; }
  double* row(std::size_t i) { return values.data() + i * cols; }
};

struct Prediction {
  int label = 0;
  std::vector<double> scores;  // per-class vote fractions, sums to 1
};

// K-nearest neighbors with a Minkowski distance; predictions are neighbor
// vote fractions, ties broken towards the smallest class index.
class KnnModel {
 public:
  KnnModel() = default;
  KnnModel(FeatureMatrix train, std::vector<int> labels, std::size_t num_classes, int k,
           double minkowski_p = 2.0);

  Prediction predict(const std::vector<double>& features) const { return predict(features, k_); }
  Prediction predict(const std::vector<double>& features, int k) const;

  int k() const { return k_; }
  double minkowski_p() const { return p_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t train_size() const { return train_.rows; }

  void save(const std::filesystem::path& path, const std::string& task,
            const std::vector<std::string>& class_names) const;
  static KnnModel load(const std::filesystem::path& path, std::string* task = nullptr,
                       std::vector<std::string>* class_names = nullptr);

 private:
  FeatureMatrix train_;
  std::vector<int> labels_;
  std::size_t num_classes_ = 0;
  int k_ = 3;
  double p_ = 2.0;
};

struct RandomForestConfig {
  int n_trees = 100;
  int max_depth = 14;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // leaf majority class
};

// Random forest over axis-aligned Gini splits; each tree is grown on a
// seeded bootstrap sample with sqrt(d) candidate features per node.
class RandomForestModel {
 public:
  RandomForestModel() = default;

  static RandomForestModel fit(const FeatureMatrix& train, const std::vector<int>& labels,
                               std::size_t num_classes, const RandomForestConfig& config);

  Prediction predict(const std::vector<double>& features) const;

  const RandomForestConfig& config() const { return config_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t tree_count() const { return trees_.size(); }
  int tree_depth(std::size_t tree) const;

  void save(const std::filesystem::path& path, const std::string& task,
            const std::vector<std::string>& class_names) const;
  static RandomForestModel load(const std::filesystem::path& path, std::string* task = nullptr,
                                std::vector<std::string>* class_names = nullptr);

 private:
  RandomForestConfig config_;
  std::size_t num_classes_ = 0;
  std::size_t num_features_ = 0;
  std::vector<std::vector<TreeNode>> trees_;
};

}  // namespace energuard::baselines
