#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "energuard/nn/tensor.hpp"

namespace energuard::nn {

enum class LayerKind : std::uint8_t {
  Conv1D = 1,
  MaxPool1D,
  Dense,
  Dropout,
  Relu,
  Softmax,
  Flatten,
};

enum class LossKind : std::uint8_t { BinaryCrossEntropy = 1, CategoricalCrossEntropy };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t filters = 0;      // Conv1D
  std::size_t kernel_size = 3;  // Conv1D (stride 1, valid padding)
  std::size_t pool_size = 10;   // MaxPool1D (stride = pool_size)
  std::size_t units = 0;        // Dense
  double rate = 0.0;            // Dropout

  static LayerSpec conv1d(std::size_t filters, std::size_t kernel_size = 3) {
    LayerSpec s;
    s.kind = LayerKind::Conv1D;
    s.filters = filters;
    s.kernel_size = kernel_size;
    return s;
  }
  static LayerSpec maxpool1d(std::size_t pool_size = 10) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool1D;
    s.pool_size = pool_size;
    return s;
  }
  static LayerSpec dense(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    return s;
  }
  static LayerSpec dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.rate = rate;
    return s;
  }
  static LayerSpec relu() { return LayerSpec{LayerKind::Relu, 0, 0, 0, 0, 0.0}; }
  static LayerSpec softmax() { return LayerSpec{LayerKind::Softmax, 0, 0, 0, 0, 0.0}; }
  static LayerSpec flatten() { return LayerSpec{LayerKind::Flatten, 0, 0, 0, 0, 0.0}; }

  void validate() const {
    switch (kind) {
      case LayerKind::Conv1D:
        if (filters < 1 || kernel_size < 1) throw ShapeMismatch("conv1d needs filters,kernel >= 1");
        break;
      case LayerKind::MaxPool1D:
        if (pool_size < 1) throw ShapeMismatch("maxpool1d needs pool_size >= 1");
        break;
      case LayerKind::Dense:
        if (units < 1) throw ShapeMismatch("dense needs units >= 1");
        break;
      case LayerKind::Dropout:
        if (rate < 0.0 || rate >= 1.0) throw ShapeMismatch("dropout rate must be in [0,1)");
        break;
      default:
        break;
    }
  }
};

// Elementwise max(0, x).
template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (T& v : out.data) v = v > T{0} ? v : T{0};
  return out;
}

// Row-wise softmax with shift-by-max; rows sum to 1.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  if (x.rank() != 2) throw ShapeMismatch("softmax expects (batch, classes)");
  Tensor<T> out = x;
  const std::size_t k = x.shape[1];
  for (std::size_t b = 0; b < x.shape[0]; ++b) {
    T* row = out.row2(b);
    T m = row[0];
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    T sum{0};
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - m);
      sum += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
  }
  return out;
}

// Batch-mean cross-entropy on probabilities, clamped to [eps, 1-eps].
// The binary kind is the two-class specialization and requires K == 2.
template <typename T>
T cross_entropy(LossKind kind, const Tensor<T>& probs, const Tensor<T>& one_hot) {
  if (probs.rank() != 2 || probs.shape != one_hot.shape) {
    throw ShapeMismatch("cross_entropy expects matching (batch, classes) tensors");
  }
  if (kind == LossKind::BinaryCrossEntropy && probs.shape[1] != 2) {
    throw ShapeMismatch("binary cross-entropy requires exactly 2 classes");
  }
  constexpr double eps = 1e-12;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double y = static_cast<double>(one_hot.data[i]);
    if (y == 0.0) continue;
    const double p = std::clamp(static_cast<double>(probs.data[i]), eps, 1.0 - eps);
    total -= y * std::log(p);
  }
  return static_cast<T>(total / static_cast<double>(probs.shape[0]));
}

// One layer of the network; forward caches whatever backward needs.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerSpec spec() const = 0;
  virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, bool training) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::vector<Tensor<T>*> params() { return {}; }
  virtual std::vector<Tensor<T>*> grads() { return {}; }
  void zero_grad() {
    for (Tensor<T>* g : grads()) g->fill(T{0});
  }
};

// 1D convolution, stride 1, valid padding: out[b,i,f] =
// bias[f] + sum_{j<k, c<C} in[b,i+j,c] * w[f,j,c].
template <typename T>
class Conv1DLayer final : public Layer<T> {
 public:
  Conv1DLayer(std::size_t filters, std::size_t kernel_size, std::size_t in_channels)
      : filters_(filters),
        kernel_(kernel_size),
        channels_(in_channels),
        w_({filters, kernel_size, in_channels}),
        b_({filters}),
        gw_({filters, kernel_size, in_channels}),
        gb_({filters}) {}

  LayerSpec spec() const override { return LayerSpec::conv1d(filters_, kernel_); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 3) throw ShapeMismatch("conv1d expects (batch, length, channels)");
    if (in[2] != channels_) throw ShapeMismatch("conv1d channel mismatch");
    if (in[1] < kernel_) {
      throw ShapeUnderflow("conv1d input length " + std::to_string(in[1]) +
                           " shorter than kernel " + std::to_string(kernel_));
    }
    return {in[0], in[1] - kernel_ + 1, filters_};
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const auto out_shape = output_shape(x.shape);
    input_ = x;
    Tensor<T> out(out_shape);

    // w transposed to [k, C, F] so the inner accumulation runs over the
    // contiguous filter axis of the output row.
    Tensor<T> wt({kernel_, channels_, filters_});
    for (std::size_t f = 0; f < filters_; ++f) {
      for (std::size_t j = 0; j < kernel_; ++j) {
        for (std::size_t c = 0; c < channels_; ++c) {
          wt.data[(j * channels_ + c) * filters_ + f] = w_.data[(f * kernel_ + j) * channels_ + c];
        }
      }
    }

    const std::size_t batch = x.shape[0];
    const std::size_t out_len = out_shape[1];
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < out_len; ++i) {
        T* orow = out.row3(b, i);
        std::copy(b_.data.begin(), b_.data.end(), orow);
        for (std::size_t j = 0; j < kernel_; ++j) {
          const T* xrow = x.row3(b, i + j);
          for (std::size_t c = 0; c < channels_; ++c) {
            const T xv = xrow[c];
            const T* wrow = wt.data.data() + (j * channels_ + c) * filters_;
            for (std::size_t f = 0; f < filters_; ++f) orow[f] += xv * wrow[f];
          }
        }
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    const std::size_t batch = input_.shape[0];
    const std::size_t out_len = grad_out.shape[1];
    Tensor<T> grad_in(input_.shape);

    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < out_len; ++i) {
        const T* go = grad_out.row3(b, i);
        for (std::size_t f = 0; f < filters_; ++f) {
          const T g = go[f];
          gb_.data[f] += g;
          for (std::size_t j = 0; j < kernel_; ++j) {
            const T* xrow = input_.row3(b, i + j);
            T* grow = grad_in.row3(b, i + j);
            T* wrow = w_.data.data() + (f * kernel_ + j) * channels_;
            T* gwrow = gw_.data.data() + (f * kernel_ + j) * channels_;
            for (std::size_t c = 0; c < channels_; ++c) {
              gwrow[c] += g * xrow[c];
              grow[c] += g * wrow[c];
            }
          }
        }
      }
    }
    return grad_in;
  }

  std::vector<Tensor<T>*> params() override { return {&w_, &b_}; }
  std::vector<Tensor<T>*> grads() override { return {&gw_, &gb_}; }

  std::size_t fan_in() const { return kernel_ * channels_; }
  std::size_t fan_out() const { return kernel_ * filters_; }

 private:
  std::size_t filters_, kernel_, channels_;
  Tensor<T> w_, b_, gw_, gb_;
  Tensor<T> input_;
};

// Non-overlapping max pooling; a trailing remainder shorter than the
// window is dropped. Argmax indices are kept for the backward pass.
template <typename T>
class MaxPool1DLayer final : public Layer<T> {
 public:
  explicit MaxPool1DLayer(std::size_t pool_size) : size_(pool_size) {}

  LayerSpec spec() const override { return LayerSpec::maxpool1d(size_); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 3) throw ShapeMismatch("maxpool1d expects (batch, length, channels)");
    if (in[1] < size_) {
      throw ShapeUnderflow("maxpool1d input length " + std::to_string(in[1]) +
                           " shorter than pool size " + std::to_string(size_));
    }
    return {in[0], in[1] / size_, in[2]};
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const auto out_shape = output_shape(x.shape);
    in_shape_ = x.shape;
    Tensor<T> out(out_shape);
    argmax_.assign(out.size(), 0);

    const std::size_t channels = x.shape[2];
    for (std::size_t b = 0; b < x.shape[0]; ++b) {
      for (std::size_t o = 0; o < out_shape[1]; ++o) {
        for (std::size_t c = 0; c < channels; ++c) {
          std::size_t best = o * size_;
          T best_v = x.at3(b, best, c);
          for (std::size_t j = 1; j < size_; ++j) {
            const T v = x.at3(b, o * size_ + j, c);
            if (v > best_v) {
              best_v = v;
              best = o * size_ + j;
            }
          }
          out.at3(b, o, c) = best_v;
          argmax_[(b * out_shape[1] + o) * channels + c] = best;
        }
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> grad_in(in_shape_);
    const std::size_t channels = in_shape_[2];
    for (std::size_t b = 0; b < grad_out.shape[0]; ++b) {
      for (std::size_t o = 0; o < grad_out.shape[1]; ++o) {
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t src = argmax_[(b * grad_out.shape[1] + o) * channels + c];
          grad_in.at3(b, src, c) += grad_out.at3(b, o, c);
        }
      }
    }
    return grad_in;
  }

 private:
  std::size_t size_;
  std::vector<std::size_t> in_shape_;
  std::vector<std::size_t> argmax_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(std::size_t in_features, std::size_t units)
      : in_(in_features), units_(units), w_({in_features, units}), b_({units}),
        gw_({in_features, units}), gb_({units}) {}

  LayerSpec spec() const override { return LayerSpec::dense(units_); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 2) throw ShapeMismatch("dense expects (batch, features); add Flatten first");
    if (in[1] != in_) {
      throw ShapeMismatch("dense expects " + std::to_string(in_) + " features, got " +
                          std::to_string(in[1]));
    }
    return {in[0], units_};
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const auto out_shape = output_shape(x.shape);
    input_ = x;
    Tensor<T> out(out_shape);
    for (std::size_t b = 0; b < x.shape[0]; ++b) {
      T* orow = out.row2(b);
      std::copy(b_.data.begin(), b_.data.end(), orow);
      const T* xrow = x.row2(b);
      for (std::size_t n = 0; n < in_; ++n) {
        const T xv = xrow[n];
        const T* wrow = w_.row2(n);
        for (std::size_t m = 0; m < units_; ++m) orow[m] += xv * wrow[m];
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> grad_in(input_.shape);
    for (std::size_t b = 0; b < input_.shape[0]; ++b) {
      const T* go = grad_out.row2(b);
      const T* xrow = input_.row2(b);
      T* girow = grad_in.row2(b);
      for (std::size_t m = 0; m < units_; ++m) gb_.data[m] += go[m];
      for (std::size_t n = 0; n < in_; ++n) {
        T* gwrow = gw_.row2(n);
        const T* wrow = w_.row2(n);
        T acc{0};
        const T xv = xrow[n];
        for (std::size_t m = 0; m < units_; ++m) {
          gwrow[m] += xv * go[m];
          acc += go[m] * wrow[m];
        }
        girow[n] = acc;
      }
    }
    return grad_in;
  }

  std::vector<Tensor<T>*> params() override { return {&w_, &b_}; }
  std::vector<Tensor<T>*> grads() override { return {&gw_, &gb_}; }

  std::size_t fan_in() const { return in_; }
  std::size_t fan_out() const { return units_; }

 private:
  std::size_t in_, units_;
  Tensor<T> w_, b_, gw_, gb_;
  Tensor<T> input_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  LayerSpec spec() const override { return LayerSpec::relu(); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    return in;
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    mask_.assign(x.size(), 0);
    Tensor<T> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out.data[i] > T{0}) {
        mask_[i] = 1;
      } else {
        out.data[i] = T{0};
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i) {
      if (!mask_[i]) grad_in.data[i] = T{0};
    }
    return grad_in;
  }

 private:
  std::vector<std::uint8_t> mask_;
};

template <typename T>
class SoftmaxLayer final : public Layer<T> {
 public:
  LayerSpec spec() const override { return LayerSpec::softmax(); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 2) throw ShapeMismatch("softmax expects (batch, classes)");
    return in;
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    probs_ = softmax_rows(x);
    return probs_;
  }

  // General Jacobian-vector product; the cross-entropy training path
  // bypasses this with the fused (p - y)/batch gradient.
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> grad_in(probs_.shape);
    const std::size_t k = probs_.shape[1];
    for (std::size_t b = 0; b < probs_.shape[0]; ++b) {
      const T* p = probs_.row2(b);
      const T* g = grad_out.row2(b);
      T dot{0};
      for (std::size_t j = 0; j < k; ++j) dot += g[j] * p[j];
      T* gi = grad_in.row2(b);
      for (std::size_t j = 0; j < k; ++j) gi[j] = p[j] * (g[j] - dot);
    }
    return grad_in;
  }

  const Tensor<T>& probabilities() const { return probs_; }

 private:
  Tensor<T> probs_;
};

// Inverted dropout: training zeroes with probability `rate` and scales
// survivors by 1/(1-rate); inference is the identity.
template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  DropoutLayer(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {}

  LayerSpec spec() const override { return LayerSpec::dropout(rate_); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    return in;
  }

  Tensor<T> forward(const Tensor<T>& x, bool training) override {
    if (!training || rate_ == 0.0) {
      scale_.clear();  // identity; backward passes gradients through
      return x;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    scale_.assign(x.size(), T{0});
    Tensor<T> out = x;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (u(rng_) < rate_) {
        out.data[i] = T{0};
      } else {
        out.data[i] *= keep_scale;
        scale_[i] = keep_scale;
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    if (scale_.empty()) return grad_out;
    Tensor<T> grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in.data[i] *= scale_[i];
    return grad_in;
  }

  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  double rate_;
  std::mt19937_64 rng_;
  std::vector<T> scale_;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  LayerSpec spec() const override { return LayerSpec::flatten(); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() < 2) throw ShapeMismatch("flatten expects rank >= 2");
    std::size_t features = 1;
    for (std::size_t i = 1; i < in.size(); ++i) features *= in[i];
    return {in[0], features};
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    in_shape_ = x.shape;
    return x.reshaped(output_shape(x.shape));
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override { return grad_out.reshaped(in_shape_); }

 private:
  std::vector<std::size_t> in_shape_;
};

}  // namespace energuard::nn
