#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "energuard/nn/layers.hpp"

namespace energuard::nn {

// An ordered layer stack with deterministic Glorot-uniform initialization.
// Shape composition is validated at build time against the declared input
// shape (batch, input_length, in_channels).
template <typename T>
class Network {
 public:
  Network(std::vector<LayerSpec> specs, std::size_t input_length, std::size_t in_channels,
          std::uint64_t seed)
      : specs_(std::move(specs)),
        input_length_(input_length),
        in_channels_(in_channels),
        seed_(seed) {
    if (input_length_ < 1 || in_channels_ < 1) {
      throw ShapeMismatch("network input shape must be positive");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> shape{1, input_length_, in_channels_};

    for (const LayerSpec& spec : specs_) {
      spec.validate();
      std::unique_ptr<Layer<T>> layer;
      switch (spec.kind) {
        case LayerKind::Conv1D: {
          if (shape.size() != 3) throw ShapeMismatch("conv1d expects (batch, length, channels)");
          auto conv = std::make_unique<Conv1DLayer<T>>(spec.filters, spec.kernel_size, shape[2]);
          glorot_init(*conv->params()[0], conv->fan_in(), conv->fan_out(), rng);
          layer = std::move(conv);
          break;
        }
        case LayerKind::MaxPool1D:
          layer = std::make_unique<MaxPool1DLayer<T>>(spec.pool_size);
          break;
        case LayerKind::Dense: {
          if (shape.size() != 2) throw ShapeMismatch("dense expects (batch, features)");
          auto dense = std::make_unique<DenseLayer<T>>(shape[1], spec.units);
          glorot_init(*dense->params()[0], dense->fan_in(), dense->fan_out(), rng);
          layer = std::move(dense);
          break;
        }
        case LayerKind::Dropout:
          layer = std::make_unique<DropoutLayer<T>>(spec.rate, rng());
          break;
        case LayerKind::Relu:
          layer = std::make_unique<ReluLayer<T>>();
          break;
        case LayerKind::Softmax:
          layer = std::make_unique<SoftmaxLayer<T>>();
          break;
        case LayerKind::Flatten:
          layer = std::make_unique<FlattenLayer<T>>();
          break;
      }
      shape = layer->output_shape(shape);
      layers_.push_back(std::move(layer));
    }
    output_shape_ = shape;
  }

  Tensor<T> forward(const Tensor<T>& x, bool training = false) {
    Tensor<T> h = x;
    normalize_input(h);
    for (auto& layer : layers_) h = layer->forward(h, training);
    return h;
  }

  // Forward pass, cross-entropy loss, and backprop into parameter
  // gradients. The softmax output layer and the loss are fused: the
  // gradient seeded below the softmax is (p - y) / batch.
  T loss_and_backward(const Tensor<T>& x, const Tensor<T>& one_hot, LossKind kind,
                      bool training = true) {
    if (layers_.empty() || specs_.back().kind != LayerKind::Softmax) {
      throw ShapeMismatch("loss path requires a trailing softmax layer");
    }
    const Tensor<T> probs = forward(x, training);
    if (probs.shape != one_hot.shape) {
      throw ShapeMismatch("targets shape " + one_hot.shape_string() + " does not match output " +
                          probs.shape_string());
    }
    const T loss = cross_entropy(kind, probs, one_hot);

    const T inv_batch = static_cast<T>(1.0 / static_cast<double>(x.shape[0]));
    Tensor<T> grad(probs.shape);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad.data[i] = (probs.data[i] - one_hot.data[i]) * inv_batch;
    }
    for (std::size_t li = layers_.size() - 1; li-- > 0;) {
      grad = layers_[li]->backward(grad);
    }
    return loss;
  }

  std::vector<Tensor<T>*> parameters() {
    std::vector<Tensor<T>*> out;
    for (auto& layer : layers_) {
      for (Tensor<T>* p : layer->params()) out.push_back(p);
    }
    return out;
  }

  std::vector<Tensor<T>*> gradients() {
    std::vector<Tensor<T>*> out;
    for (auto& layer : layers_) {
      for (Tensor<T>* g : layer->grads()) out.push_back(g);
    }
    return out;
  }

  void zero_grad() {
    for (auto& layer : layers_) layer->zero_grad();
  }

  std::vector<Tensor<T>> snapshot_weights() {
    std::vector<Tensor<T>> out;
    for (Tensor<T>* p : parameters()) out.push_back(*p);
    return out;
  }

  void restore_weights(const std::vector<Tensor<T>>& weights) {
    auto params = parameters();
    if (weights.size() != params.size()) throw ShapeMismatch("weight snapshot size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i]->shape != weights[i].shape) throw ShapeMismatch("weight shape mismatch");
      *params[i] = weights[i];
    }
  }

  const std::vector<LayerSpec>& specs() const { return specs_; }
  std::size_t input_length() const { return input_length_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t num_classes() const { return output_shape_.back(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t parameter_count() {
    std::size_t n = 0;
    for (Tensor<T>* p : parameters()) n += p->size();
    return n;
  }

 private:
  // Inputs arrive as (batch, L, C) or flat (batch, L*C); layers see rank 3.
  void normalize_input(Tensor<T>& x) const {
    if (x.rank() == 2 && x.shape[1] == input_length_ * in_channels_) {
      x.shape = {x.shape[0], input_length_, in_channels_};
      return;
    }
    if (x.rank() == 3 && x.shape[1] == input_length_ && x.shape[2] == in_channels_) return;
    throw LengthMismatch("input shape " + x.shape_string() + " does not match network input (" +
                         std::to_string(input_length_) + ", " + std::to_string(in_channels_) +
                         ")");
  }

  static void glorot_init(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out,
                          std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (T& v : w.data) v = static_cast<T>(u(rng));
  }

  std::vector<LayerSpec> specs_;
  std::size_t input_length_;
  std::size_t in_channels_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<std::size_t> output_shape_;
};

}  // namespace energuard::nn
