#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "energuard/nn/adam.hpp"
#include "energuard/nn/network.hpp"

namespace energuard::nn {

struct FitConfig {
  std::size_t max_epochs = 200;
  std::size_t batch_size = 32;
  std::size_t patience = 10;  // non-improving epochs tolerated before stopping
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct FitResult {
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

template <typename T>
Tensor<T> one_hot(const std::vector<int>& labels, std::size_t num_classes) {
  Tensor<T> out({labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ShapeMismatch("label " + std::to_string(y) + " out of range for " +
                          std::to_string(num_classes) + " classes");
    }
    out.at2(i, static_cast<std::size_t>(y)) = T{1};
  }
  return out;
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& probs) {
  std::vector<int> out(probs.shape[0]);
  for (std::size_t b = 0; b < probs.shape[0]; ++b) {
    const T* row = probs.row2(b);
    out[b] = static_cast<int>(std::max_element(row, row + probs.shape[1]) - row);
  }
  return out;
}

// Inference-mode loss and top-1 accuracy, evaluated in batches.
template <typename T>
std::pair<double, double> evaluate(Network<T>& net, const Tensor<T>& x,
                                   const std::vector<int>& labels, LossKind kind,
                                   std::size_t batch_size = 64) {
  const std::size_t n = x.shape[0];
  if (n == 0) throw EmptyDataset("evaluate on empty tensor");
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    std::vector<std::size_t> idx(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor<T> xb = gather_rows(x, idx);
    const std::vector<int> yb(labels.begin() + start, labels.begin() + stop);
    const Tensor<T> probs = net.forward(xb, /*training=*/false);
    loss_sum += static_cast<double>(cross_entropy(kind, probs, one_hot<T>(yb, probs.shape[1]))) *
                static_cast<double>(stop - start);
    const std::vector<int> pred = argmax_rows(probs);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == yb[i] ? 1 : 0;
  }
  return {loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

// Mini-batch Adam training with early stopping on validation accuracy.
// Returns with the network holding its best-epoch weights. Deterministic
// for a fixed config seed and network seed.
template <typename T>
FitResult fit(Network<T>& net, const Tensor<T>& x_train, const std::vector<int>& y_train,
              const Tensor<T>& x_val, const std::vector<int>& y_val, LossKind kind,
              const FitConfig& cfg) {
  const std::size_t n = x_train.shape[0];
  if (n == 0 || x_val.shape[0] == 0) throw EmptyDataset("fit requires non-empty train and val");
  if (y_train.size() != n || y_val.size() != x_val.shape[0]) {
    throw LengthMismatch("label count does not match tensor batch");
  }
  const std::size_t k = net.num_classes();

  Adam<T> adam(net.parameters(), AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  std::mt19937_64 shuffle_rng(cfg.seed);

  FitResult result;
  std::vector<Tensor<T>> best_weights = net.snapshot_weights();
  double best_acc = -1.0;
  std::size_t best_epoch = 0;
  std::size_t stale = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      const Tensor<T> xb = gather_rows(x_train, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y_train[idx[i]];

      net.zero_grad();
      const T loss = net.loss_and_backward(xb, one_hot<T>(yb, k), kind);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw DivergenceDetected("training loss is not finite at epoch " + std::to_string(epoch));
      }
      loss_sum += static_cast<double>(loss) * static_cast<double>(idx.size());
      adam.step(net.parameters(), net.gradients());
    }

    const auto [val_loss, val_acc] = evaluate(net, x_val, y_val, kind);
    result.history.push_back(
        EpochStats{epoch, loss_sum / static_cast<double>(n), val_loss, val_acc});
    if (cfg.verbose) {
      std::fprintf(stderr, "epoch %3zu  train_loss %.5f  val_loss %.5f  val_acc %.4f\n", epoch,
                   loss_sum / static_cast<double>(n), val_loss, val_acc);
    }

    if (val_acc > best_acc) {
      best_acc = val_acc;
      best_epoch = epoch;
      best_weights = net.snapshot_weights();
      stale = 0;
    } else {
      ++stale;
      if (stale > cfg.patience) break;
    }
    if (best_acc >= 1.0) break;  // accuracy cannot improve further
  }

  net.restore_weights(best_weights);
  result.best_epoch = best_epoch;
  result.best_val_accuracy = best_acc;
  return result;
}

}  // namespace energuard::nn
