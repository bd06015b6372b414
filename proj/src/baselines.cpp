#include "energuard/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "energuard/nn/serialize.hpp"

namespace energuard::baselines {

using nlohmann::json;

// --- KNN ---

KnnModel::KnnModel(FeatureMatrix train, std::vector<int> labels, std::size_t num_classes, int k,
                   double minkowski_p)
    : train_(std::move(train)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      k_(k),
      p_(minkowski_p) {
  if (train_.rows == 0 || train_.rows != labels_.size()) {
    throw LengthMismatch("knn training matrix and labels disagree");
  }
  if (k_ < 1 || static_cast<std::size_t>(k_) > train_.rows) {
    throw Error("knn requires 1 <= k <= training size");
  }
  if (num_classes_ < 1) throw Error("knn requires at least one class");
}

namespace {

double minkowski(const double* a, const double* b, std::size_t d, double p) {
  if (p == 2.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = a[i] - b[i];
      s += diff * diff;
    }
    return std::sqrt(s);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += std::pow(std::abs(a[i] - b[i]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

Prediction KnnModel::predict(const std::vector<double>& features, int k) const {
  if (features.size() != train_.cols) {
    throw LengthMismatch("query has " + std::to_string(features.size()) + " features, model has " +
                         std::to_string(train_.cols));
  }
  if (k < 1 || static_cast<std::size_t>(k) > train_.rows) {
    throw Error("knn requires 1 <= k <= training size");
  }

  std::vector<std::pair<double, std::size_t>> dist(train_.rows);
  for (std::size_t i = 0; i < train_.rows; ++i) {
    dist[i] = {minkowski(features.data(), train_.row(i), train_.cols, p_), i};
  }
  // Distance ties resolved by training index so predictions are reproducible.
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  Prediction out;
  out.scores.assign(num_classes_, 0.0);
  for (int i = 0; i < k; ++i) out.scores[static_cast<std::size_t>(labels_[dist[i].second])] += 1.0;
  for (double& s : out.scores) s /= static_cast<double>(k);
  out.label = static_cast<int>(std::max_element(out.scores.begin(), out.scores.end()) -
                               out.scores.begin());  // tie -> smallest class index
  return out;
}

void KnnModel::save(const std::filesystem::path& path, const std::string& task,
                    const std::vector<std::string>& class_names) const {
  nn::ModelFile file;
  file.header["kind"] = "knn";
  file.header["task"] = task;
  file.header["k"] = k_;
  file.header["minkowski_p"] = p_;
  file.header["num_classes"] = num_classes_;
  file.header["rows"] = train_.rows;
  file.header["cols"] = train_.cols;
  file.header["labels"] = labels_;
  file.header["class_names"] = class_names;
  nn::append_f64(file.blob, train_.values);
  nn::write_model_file(file, path);
}

KnnModel KnnModel::load(const std::filesystem::path& path, std::string* task,
                        std::vector<std::string>* class_names) {
  const nn::ModelFile file = nn::read_model_file(path);
  if (file.header.value("kind", "") != "knn") throw CorruptModel("model container is not knn");
  FeatureMatrix m;
  m.rows = file.header.at("rows").get<std::size_t>();
  m.cols = file.header.at("cols").get<std::size_t>();
  std::size_t offset = 0;
  m.values = nn::take_f64(file.blob, offset, m.rows * m.cols);
  if (task) *task = file.header.value("task", "");
  if (class_names) *class_names = file.header.value("class_names", std::vector<std::string>{});
  return KnnModel(std::move(m), file.header.at("labels").get<std::vector<int>>(),
                  file.header.at("num_classes").get<std::size_t>(), file.header.at("k").get<int>(),
                  file.header.at("minkowski_p").get<double>());
}

// --- Random forest ---

namespace {

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (std::size_t c : counts) {
    const double f = static_cast<double>(c) / static_cast<double>(total);
    g -= f * f;
  }
  return g;
}

int majority(const std::vector<std::size_t>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity_after = 0.0;
};

struct TreeBuilder {
  const FeatureMatrix& x;
  const std::vector<int>& y;
  std::size_t num_classes;
  int max_depth;
  std::mt19937_64 rng;
  std::vector<TreeNode> nodes;

  std::vector<std::size_t> class_counts(const std::vector<std::size_t>& samples) const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t s : samples) ++counts[static_cast<std::size_t>(y[s])];
    return counts;
  }

  // Best Gini split among up to sqrt(d) candidate features, walking a random
  // feature permutation and skipping features that are constant on this node
  // (so a constant draw does not use up a slot).
  SplitChoice best_split(const std::vector<std::size_t>& samples) {
    std::vector<std::size_t> features(x.cols);
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);
    const std::size_t want =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols))));

    SplitChoice best;
    double best_impurity = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;

    std::vector<std::pair<double, int>> sorted(samples.size());
    for (std::size_t f : features) {
      if (evaluated >= want && best.feature >= 0) break;

      for (std::size_t i = 0; i < samples.size(); ++i) {
        sorted[i] = {x.row(samples[i])[f], y[samples[i]]};
      }
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant on this node
      ++evaluated;

      std::vector<std::size_t> left(num_classes, 0);
      std::vector<std::size_t> right = class_counts(samples);
      const std::size_t n = sorted.size();
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left[static_cast<std::size_t>(sorted[i].second)];
        --right[static_cast<std::size_t>(sorted[i].second)];
        if (sorted[i].first == sorted[i + 1].first) continue;  // not a boundary
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        const double impurity = (static_cast<double>(nl) * gini(left, nl) +
                                 static_cast<double>(nr) * gini(right, nr)) /
                                static_cast<double>(n);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
          best.impurity_after = impurity;
        }
      }
    }
    return best;
  }

  int build(const std::vector<std::size_t>& samples, int depth) {
    const auto counts = class_counts(samples);
    const int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[node_id].label = majority(counts);

    const bool pure = std::count(counts.begin(), counts.end(), std::size_t{0}) ==
                      static_cast<std::ptrdiff_t>(num_classes - 1);
    if (pure || depth >= max_depth || samples.size() < 2) return node_id;

    const SplitChoice choice = best_split(samples);
    if (choice.feature < 0) return node_id;  // every feature constant here

    std::vector<std::size_t> left_samples;
    std::vector<std::size_t> right_samples;
    for (std::size_t s : samples) {
      if (x.row(s)[static_cast<std::size_t>(choice.feature)] <= choice.threshold) {
        left_samples.push_back(s);
      } else {
        right_samples.push_back(s);
      }
    }
    if (left_samples.empty() || right_samples.empty()) return node_id;

    nodes[node_id].feature = choice.feature;
    nodes[node_id].threshold = choice.threshold;
    const int left = build(left_samples, depth + 1);
    nodes[node_id].left = left;
    const int right = build(right_samples, depth + 1);
    nodes[node_id].right = right;
    return node_id;
  }
};

int depth_of(const std::vector<TreeNode>& nodes, int node) {
  if (node < 0 || nodes[static_cast<std::size_t>(node)].feature < 0) return 0;
  const TreeNode& n = nodes[static_cast<std::size_t>(node)];
  return 1 + std::max(depth_of(nodes, n.left), depth_of(nodes, n.right));
}

}  // namespace

RandomForestModel RandomForestModel::fit(const FeatureMatrix& train, const std::vector<int>& labels,
                                         std::size_t num_classes,
                                         const RandomForestConfig& config) {
  if (train.rows == 0 || train.rows != labels.size()) {
    throw LengthMismatch("random forest training matrix and labels disagree");
  }
  std::vector<bool> seen(num_classes, false);
  std::size_t distinct = 0;
  for (int label : labels) {
    const auto c = static_cast<std::size_t>(label);
    if (c >= num_classes) throw LengthMismatch("label out of range");
    if (!seen[c]) {
      seen[c] = true;
      ++distinct;
    }
  }
  if (distinct < 2) throw SingleClass("random forest needs at least two classes in the data");
  if (config.n_trees < 1 || config.max_depth < 1) {
    throw Error("random forest needs n_trees >= 1 and max_depth >= 1");
  }

  RandomForestModel model;
  model.config_ = config;
  model.num_classes_ = num_classes;
  model.num_features_ = train.cols;
  model.trees_.reserve(static_cast<std::size_t>(config.n_trees));

  for (int t = 0; t < config.n_trees; ++t) {
    // Per-tree stream derived from the root seed keeps the forest
    // reproducible and allows tree-parallel training later.
    std::seed_seq seq{config.seed, static_cast<std::uint64_t>(t)};
    TreeBuilder builder{train, labels, num_classes, config.max_depth, std::mt19937_64(seq), {}};

    std::vector<std::size_t> bootstrap(train.rows);
    std::uniform_int_distribution<std::size_t> pick(0, train.rows - 1);
    for (std::size_t i = 0; i < train.rows; ++i) bootstrap[i] = pick(builder.rng);

    builder.build(bootstrap, 0);
    model.trees_.push_back(std::move(builder.nodes));
  }
  return model;
}

Prediction RandomForestModel::predict(const std::vector<double>& features) const {
  if (features.size() != num_features_) {
    throw LengthMismatch("query has " + std::to_string(features.size()) + " features, model has " +
                         std::to_string(num_features_));
  }
  Prediction out;
  out.scores.assign(num_classes_, 0.0);
  for (const auto& tree : trees_) {
    int node = 0;
    while (tree[static_cast<std::size_t>(node)].feature >= 0) {
      const TreeNode& n = tree[static_cast<std::size_t>(node)];
      node = features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    out.scores[static_cast<std::size_t>(tree[static_cast<std::size_t>(node)].label)] += 1.0;
  }
  for (double& s : out.scores) s /= static_cast<double>(trees_.size());
  out.label = static_cast<int>(std::max_element(out.scores.begin(), out.scores.end()) -
                               out.scores.begin());
  return out;
}

int RandomForestModel::tree_depth(std::size_t tree) const {
  return depth_of(trees_[tree], 0);
}

void RandomForestModel::save(const std::filesystem::path& path, const std::string& task,
                             const std::vector<std::string>& class_names) const {
  nn::ModelFile file;
  file.header["kind"] = "rf";
  file.header["task"] = task;
  file.header["n_trees"] = config_.n_trees;
  file.header["max_depth"] = config_.max_depth;
  file.header["seed"] = config_.seed;
  file.header["num_classes"] = num_classes_;
  file.header["num_features"] = num_features_;
  file.header["class_names"] = class_names;

  json trees = json::array();
  for (const auto& tree : trees_) {
    json nodes = json::array();
    for (const TreeNode& n : tree) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    }
    trees.push_back(std::move(nodes));
  }
  file.header["trees"] = std::move(trees);
  nn::write_model_file(file, path);
}

RandomForestModel RandomForestModel::load(const std::filesystem::path& path, std::string* task,
                                          std::vector<std::string>* class_names) {
  const nn::ModelFile file = nn::read_model_file(path);
  if (file.header.value("kind", "") != "rf") throw CorruptModel("model container is not rf");

  RandomForestModel model;
  model.config_.n_trees = file.header.at("n_trees").get<int>();
  model.config_.max_depth = file.header.at("max_depth").get<int>();
  model.config_.seed = file.header.value("seed", std::uint64_t{0});
  model.num_classes_ = file.header.at("num_classes").get<std::size_t>();
  model.num_features_ = file.header.at("num_features").get<std::size_t>();
  for (const json& tree : file.header.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const json& n : tree) {
      nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                               n.at(3).get<int>(), n.at(4).get<int>()});
    }
    model.trees_.push_back(std::move(nodes));
  }
  if (task) *task = file.header.value("task", "");
  if (class_names) *class_names = file.header.value("class_names", std::vector<std::string>{});
  return model;
}

}  // namespace energuard::baselines
