#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "energuard/nn/tensor.hpp"

namespace energuard::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <typename T>
class Adam {
 public:
  explicit Adam(const std::vector<Tensor<T>*>& params, AdamConfig cfg = {}) : cfg_(cfg) {
    if (cfg.learning_rate <= 0.0 || cfg.beta1 <= 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 <= 0.0 ||
        cfg.beta2 >= 1.0) {
      throw Error("invalid adam hyperparameters");
    }
    for (const Tensor<T>* p : params) {
      m_.emplace_back(p->shape);
      v_.emplace_back(p->shape);
    }
  }

  void step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>*>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
      throw ShapeMismatch("adam state does not match parameter list");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor<T>& p = *params[i];
      const Tensor<T>& g = *grads[i];
      Tensor<T>& m = m_[i];
      Tensor<T>& v = v_[i];
      if (p.shape != g.shape) throw ShapeMismatch("gradient shape mismatch in adam step");
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = static_cast<double>(g.data[j]);
        const double mj = cfg_.beta1 * static_cast<double>(m.data[j]) + (1.0 - cfg_.beta1) * gj;
        const double vj =
            cfg_.beta2 * static_cast<double>(v.data[j]) + (1.0 - cfg_.beta2) * gj * gj;
        m.data[j] = static_cast<T>(mj);
        v.data[j] = static_cast<T>(vj);
        const double m_hat = mj / bc1;
        const double v_hat = vj / bc2;
        p.data[j] = static_cast<T>(static_cast<double>(p.data[j]) -
                                   cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon));
      }
    }
  }

  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace energuard::nn
