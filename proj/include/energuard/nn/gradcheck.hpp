#pragma once

#include <algorithm>
#include <cmath>

#include "energuard/nn/network.hpp"

namespace energuard::nn {

// Max relative error between analytic gradients and central finite
// differences over every parameter. Runs in inference mode so dropout
// layers act as the identity; meant for 64-bit networks.
inline double gradient_check(Network<double>& net, const Tensor<double>& x,
                             const Tensor<double>& one_hot_targets, LossKind kind,
                             double h = 1e-4) {
  net.zero_grad();
  net.loss_and_backward(x, one_hot_targets, kind, /*training=*/false);

  // Copy analytic gradients before the probing passes overwrite caches.
  std::vector<Tensor<double>> analytic;
  for (Tensor<double>* g : net.gradients()) analytic.push_back(*g);

  const auto loss_at = [&]() {
    const Tensor<double> probs = net.forward(x, /*training=*/false);
    return static_cast<double>(cross_entropy(kind, probs, one_hot_targets));
  };

  double max_rel = 0.0;
  auto params = net.parameters();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<double>& p = *params[pi];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double saved = p.data[j];
      p.data[j] = saved + h;
      const double loss_plus = loss_at();
      p.data[j] = saved - h;
      const double loss_minus = loss_at();
      p.data[j] = saved;

      const double numeric = (loss_plus - loss_minus) / (2.0 * h);
      const double a = analytic[pi].data[j];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace energuard::nn
