// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "npconv/errors.hpp"
#include "npconv/random.hpp"

namespace npc {

/// Per-point features, shape (N, G, C) row-major: one contiguous row of G*C
/// scalars per point, group-major inside the row. G is the convolution group
/// count and C the per-group channel width.
template <typename T>
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(std::int64_t n, std::int64_t groups, std::int64_t channels)
      : n_(n), groups_(groups), channels_(channels) {
    if (n < 0 || groups < 1 || channels < 1)
      throw ShapeError("FeatureTensor: need n >= 0, groups >= 1, channels >= 1");
    values_.assign(static_cast<std::size_t>(n * groups * channels), T(0));
  }
  FeatureTensor(std::int64_t n, std::int64_t groups, std::int64_t channels,
                std::vector<T> values)
      : n_(n), groups_(groups), channels_(channels), values_(std::move(values)) {
    if (n < 0 || groups < 1 || channels < 1)
      throw ShapeError("FeatureTensor: need n >= 0, groups >= 1, channels >= 1");
    if (static_cast<std::int64_t>(values_.size()) != n * groups * channels)
      throw ShapeError("FeatureTensor: value count does not match (n, groups, channels)");
    for (const T v : values_)
      if (!std::isfinite(static_cast<double>(v)))
        throw NonFiniteError("FeatureTensor: non-finite value");
  }

  std::int64_t n() const { return n_; }
  std::int64_t groups() const { return groups_; }
  std::int64_t channels() const { return channels_; }
  std::int64_t row_width() const { return groups_ * channels_; }

  std::span<const T> values() const { return values_; }
  std::span<T> values_mut() { return values_; }

  const T* row(std::int64_t p) const { return values_.data() + p * row_width(); }
  T* row_mut(std::int64_t p) { return values_.data() + p * row_width(); }

  T at(std::int64_t p, std::int64_t g, std::int64_t c) const {
    return values_[static_cast<std::size_t>((p * groups_ + g) * channels_ + c)];
  }
  T& at(std::int64_t p, std::int64_t g, std::int64_t c) {
    return values_[static_cast<std::size_t>((p * groups_ + g) * channels_ + c)];
  }

 private:
  std::int64_t n_ = 0;
  std::int64_t groups_ = 1;
  std::int64_t channels_ = 1;
  std::vector<T> values_;
};

/// Convolution weights, shape (K, G, C_in_g, C_out_g) row-major. K = t^3 with
/// t the odd kernel resolution; entry (k, g, c, m) multiplies input channel c
/// into output channel m of group g for local cell k. Groups never mix.
template <typename T>
class WeightTensor {
 public:
  WeightTensor() = default;
  WeightTensor(std::int64_t t, std::int64_t groups, std::int64_t c_in, std::int64_t c_out)
      : t_(t), groups_(groups), c_in_(c_in), c_out_(c_out) {
    validate_shape();
    values_.assign(static_cast<std::size_t>(kernels() * groups * c_in * c_out), T(0));
  }
  WeightTensor(std::int64_t t, std::int64_t groups, std::int64_t c_in, std::int64_t c_out,
               std::vector<T> values)
      : t_(t), groups_(groups), c_in_(c_in), c_out_(c_out), values_(std::move(values)) {
    validate_shape();
    if (static_cast<std::int64_t>(values_.size()) != kernels() * groups_ * c_in_ * c_out_)
      throw ShapeError("WeightTensor: value count does not match (K, G, C_in_g, C_out_g)");
    for (const T v : values_)
      if (!std::isfinite(static_cast<double>(v)))
        throw NonFiniteError("WeightTensor: non-finite value");
  }

  std::int64_t t() const { return t_; }
  std::int64_t kernels() const { return t_ * t_ * t_; }
  std::int64_t groups() const { return groups_; }
  std::int64_t c_in() const { return c_in_; }
  std::int64_t c_out() const { return c_out_; }

  std::span<const T> values() const { return values_; }
  std::span<T> values_mut() { return values_; }

  /// Pointer to the (k, g) matrix, C_in_g x C_out_g row-major (c rows, m cols).
  const T* matrix(std::int64_t k, std::int64_t g) const {
    return values_.data() + ((k * groups_ + g) * c_in_) * c_out_;
  }
  T* matrix_mut(std::int64_t k, std::int64_t g) {
    return values_.data() + ((k * groups_ + g) * c_in_) * c_out_;
  }

  T at(std::int64_t k, std::int64_t g, std::int64_t c, std::int64_t m) const {
    return matrix(k, g)[c * c_out_ + m];
  }
  T& at(std::int64_t k, std::int64_t g, std::int64_t c, std::int64_t m) {
    return matrix_mut(k, g)[c * c_out_ + m];
  }

  /// Weights with C_in_g and C_out_g swapped: out.at(k,g,m,c) == at(k,g,c,m).
  /// Applying the transposed tensor propagates gradients back to the input.
  WeightTensor<T> transposed() const {
    WeightTensor<T> out(t_, groups_, c_out_, c_in_);
    for (std::int64_t k = 0; k < kernels(); ++k)
      for (std::int64_t g = 0; g < groups_; ++g) {
        const T* src = matrix(k, g);
        T* dst = out.matrix_mut(k, g);
        for (std::int64_t c = 0; c < c_in_; ++c)
          for (std::int64_t m = 0; m < c_out_; ++m) dst[m * c_in_ + c] = src[c * c_out_ + m];
      }
    return out;
  }

 private:
  void validate_shape() const {
    if (t_ < 1 || t_ % 2 == 0)
      throw ShapeError("WeightTensor: kernel resolution t must be odd and >= 1");
    if (groups_ < 1 || c_in_ < 1 || c_out_ < 1)
      throw ShapeError("WeightTensor: need groups >= 1, c_in_g >= 1, c_out_g >= 1");
  }

  std::int64_t t_ = 1;
  std::int64_t groups_ = 1;
  std::int64_t c_in_ = 1;
  std::int64_t c_out_ = 1;
  std::vector<T> values_;
};

/// Seeded weight init: uniform in [-s, s] with s = (G * C_in_g)^(-1/2), the
/// fan-in scale of one group.
template <typename T>
WeightTensor<T> make_weights(std::int64_t t, std::int64_t groups, std::int64_t c_in,
                             std::int64_t c_out, std::uint64_t seed) {
  WeightTensor<T> w(t, groups, c_in, c_out);
  const double s = 1.0 / std::sqrt(static_cast<double>(groups * c_in));
  Rng rng(seed);
  for (T& v : w.values_mut()) v = static_cast<T>(rng.uniform(-s, s));
  return w;
}

}  // namespace npc
