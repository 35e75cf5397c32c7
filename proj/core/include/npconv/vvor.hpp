// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "npconv/engine.hpp"
#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"

namespace npc {

/// Weight gradient, shape (K, G, C_out_g, C_in_g) row-major: output-channel
/// major per kernel cell, the natural orientation of accumulated outer
/// products gout.row(i) (x) fin.row(j). Note the axis order is transposed
/// relative to WeightTensor; to_weight_tensor() performs the declared
/// transpose when the gradient must line up with the weight layout.
template <typename T>
class WeightGradient {
 public:
  WeightGradient() = default;
  WeightGradient(std::int64_t kernels, std::int64_t groups, std::int64_t c_out,
                 std::int64_t c_in)
      : kernels_(kernels), groups_(groups), c_out_(c_out), c_in_(c_in) {
    if (kernels < 1 || groups < 1 || c_out < 1 || c_in < 1)
      throw ShapeError("WeightGradient: all dimensions must be >= 1");
    values_.assign(static_cast<std::size_t>(kernels * groups * c_out * c_in), T(0));
  }

  std::int64_t kernels() const { return kernels_; }
  std::int64_t groups() const { return groups_; }
  std::int64_t c_out() const { return c_out_; }
  std::int64_t c_in() const { return c_in_; }

  std::span<const T> values() const { return values_; }
  std::span<T> values_mut() { return values_; }

  /// Pointer to the (k, g) matrix, C_out_g x C_in_g row-major (m rows, c cols).
  const T* matrix(std::int64_t k, std::int64_t g) const {
    return values_.data() + ((k * groups_ + g) * c_out_) * c_in_;
  }
  T* matrix_mut(std::int64_t k, std::int64_t g) {
    return values_.data() + ((k * groups_ + g) * c_out_) * c_in_;
  }

  T at(std::int64_t k, std::int64_t g, std::int64_t m, std::int64_t c) const {
    return matrix(k, g)[m * c_in_ + c];
  }

  /// Transpose into the WeightTensor axis order (K, G, C_in_g, C_out_g).
  WeightTensor<T> to_weight_tensor(std::int64_t t) const {
    WeightTensor<T> out(t, groups_, c_in_, c_out_);
    if (out.kernels() != kernels_)
      throw ShapeError("WeightGradient::to_weight_tensor: t^3 != kernels");
    for (std::int64_t k = 0; k < kernels_; ++k)
      for (std::int64_t g = 0; g < groups_; ++g) {
        const T* src = matrix(k, g);
        T* dst = out.matrix_mut(k, g);
        for (std::int64_t m = 0; m < c_out_; ++m)
          for (std::int64_t c = 0; c < c_in_; ++c) dst[c * c_out_ + m] = src[m * c_in_ + c];
      }
    return out;
  }

 private:
  std::int64_t kernels_ = 0;
  std::int64_t groups_ = 0;
  std::int64_t c_out_ = 0;
  std::int64_t c_in_ = 0;
  std::vector<T> values_;
};

template <typename T>
struct VvorResult {
  WeightGradient<T> grad;
  AccessCounters counters;
  std::uint64_t aux_bytes = 0;
};

/// Weight-gradient kernel: grad[k] += gout.row(i) (x) fin.row(j) for every
/// triplet (i, j, k), one outer product per triplet per group. The grouped
/// executor accumulates the running outer-product sum on chip and flushes to
/// grad[k] only when k changes, so by_k-sorted lists flush once per distinct
/// k per group. Counter roles are documented on AccessCounters. Shapes:
/// gout (N_out, G, C_out_g), fin (N_in, G, C_in_g), grad (K, G, C_out_g, C_in_g).
template <typename T>
VvorResult<T> vvor(const FeatureTensor<T>& gout, const FeatureTensor<T>& fin,
                   const TripletList& triplets, std::int64_t n_kernels,
                   const ExecConfig& config);

}  // namespace npc
