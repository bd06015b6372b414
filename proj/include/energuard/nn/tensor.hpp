#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "energuard/errors.hpp"

namespace energuard::nn {

// Dense row-major tensor. The layers work on rank 2 (batch, features)
// and rank 3 (batch, length, channels) shapes.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(count(shape), T{}) {}
  Tensor(std::vector<std::size_t> s, std::vector<T> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != count(shape)) throw ShapeMismatch("tensor data does not match shape");
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  T& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  T at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  T& at3(std::size_t b, std::size_t i, std::size_t c) {
    return data[(b * shape[1] + i) * shape[2] + c];
  }
  T at3(std::size_t b, std::size_t i, std::size_t c) const {
    return data[(b * shape[1] + i) * shape[2] + c];
  }

  T* row2(std::size_t i) { return data.data() + i * shape[1]; }
  const T* row2(std::size_t i) const { return data.data() + i * shape[1]; }
  T* row3(std::size_t b, std::size_t i) { return data.data() + (b * shape[1] + i) * shape[2]; }
  const T* row3(std::size_t b, std::size_t i) const {
    return data.data() + (b * shape[1] + i) * shape[2];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  Tensor reshaped(std::vector<std::size_t> s) const {
    if (count(s) != data.size()) throw ShapeMismatch("reshape changes element count");
    Tensor out;
    out.shape = std::move(s);
    out.data = data;
    return out;
  }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

// Rows of `x` selected by `indices`, preserving trailing dimensions.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<std::size_t>& indices) {
  std::vector<std::size_t> shape = x.shape;
  shape[0] = indices.size();
  Tensor<T> out(shape);
  const std::size_t row = x.size() / x.shape[0];
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const T* src = x.data.data() + indices[i] * row;
    std::copy(src, src + row, out.data.data() + i * row);
  }
  return out;
}

}  // namespace energuard::nn
