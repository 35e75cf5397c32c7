// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

#include "npconv/engine.hpp"
#include "npconv/spatial.hpp"
#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"
#include "npconv/vvor.hpp"

namespace npc {

template <typename T>
struct BackwardResult {
  FeatureTensor<T> grad_in;
  WeightGradient<T> grad_w;
};

template <typename T>
struct StridedResult {
  PointCloud coarse_cloud;
  FeatureTensor<T> coarse_features;
  DownsampleMap map;  // for a later upsample back to the fine cloud
};

/// One convolution layer: owns weights + geometry, builds and caches the
/// sorted triplet list per (cloud identity, geometry), and runs the forward /
/// backward kernels. No bias, no activation. The cached forward inputs feed
/// backward; backward before any forward throws StateError.
template <typename T>
class PointConvOp {
 public:
  PointConvOp(WeightTensor<T> weights, ConvGeometry geometry, ExecConfig config = {});

  const WeightTensor<T>& weights() const { return weights_; }
  const ConvGeometry& geometry() const { return geometry_; }
  const ExecConfig& config() const { return config_; }
  const TripletList& cached_triplets() const;

  /// Self-convolution (out_cloud == in_cloud) in native mode; site
  /// convolution in degraded mode (inputs are quantized and merged first,
  /// output rows correspond to snapped_cloud()).
  FeatureTensor<T> forward(const PointCloud& in_cloud, const FeatureTensor<T>& fin);

  /// Native mode with distinct output sites (e.g. a downsampled cloud).
  FeatureTensor<T> forward(const PointCloud& in_cloud, const PointCloud& out_cloud,
                           const FeatureTensor<T>& fin);

  /// Gradients w.r.t. the cached forward inputs. grad_in matches the original
  /// input rows (in degraded mode, non-representative points get zero rows,
  /// mirroring their absence from the forward).
  BackwardResult<T> backward(const FeatureTensor<T>& gout);

  /// Degraded-mode introspection: sites of the last degraded forward.
  const PointCloud& snapped_cloud() const;
  const DownsampleMap& site_map() const;

 private:
  struct CacheKey {
    const void* in_ptr = nullptr;
    const void* out_ptr = nullptr;
    std::int64_t n_in = 0;
    std::int64_t n_out = 0;
    friend bool operator==(const CacheKey&, const CacheKey&) = default;
  };

  void build_cache(const PointCloud& in_cloud, const PointCloud& out_cloud);

  WeightTensor<T> weights_;
  ConvGeometry geometry_;
  ExecConfig config_;

  bool has_cache_ = false;
  CacheKey cache_key_;
  TripletList triplets_;
  PointCloud snapped_;
  DownsampleMap sites_;

  bool has_forward_ = false;
  FeatureTensor<T> cached_fin_;   // engine-facing rows (sites in degraded mode)
  std::int64_t fine_n_ = 0;       // original input rows of the last forward
};

/// Strided block: voxel-downsample the cloud, then convolve from the fine
/// cloud onto the kept points. Returns the coarse cloud, coarse features, and
/// the downsample map for a later upsample.
template <typename T>
StridedResult<T> strided_block(PointConvOp<T>& op, const PointCloud& cloud,
                               const FeatureTensor<T>& fin, double voxel_size);

template <typename T>
PointConvOp<T>::PointConvOp(WeightTensor<T> weights, ConvGeometry geometry, ExecConfig config)
    : weights_(std::move(weights)), geometry_(geometry), config_(config) {
  if (weights_.t() != geometry_.t)
    throw ShapeError("PointConvOp: weight kernel resolution != geometry t");
}

template <typename T>
const TripletList& PointConvOp<T>::cached_triplets() const {
  if (!has_cache_) throw StateError("PointConvOp: no triplet cache yet, run forward first");
  return triplets_;
}

template <typename T>
void PointConvOp<T>::build_cache(const PointCloud& in_cloud, const PointCloud& out_cloud) {
  // Identity cache: same position buffers + sizes means same geometry inputs.
  const CacheKey key{in_cloud.positions().data(), out_cloud.positions().data(),
                     in_cloud.n_points(), out_cloud.n_points()};
  if (has_cache_ && key == cache_key_) return;

  if (geometry_.mode == ConvMode::native) {
    triplets_ = build_triplets_native(out_cloud, in_cloud, geometry_);
    snapped_ = PointCloud();
    sites_ = DownsampleMap{};
  } else {
    DegradedBuild build = build_triplets_degraded(in_cloud, geometry_);
    triplets_ = std::move(build.triplets);
    snapped_ = std::move(build.snapped);
    sites_ = std::move(build.sites);
  }
  triplets_ = sort_triplets(std::move(triplets_), choose_sort_axis(triplets_));
  cache_key_ = key;
  has_cache_ = true;
  has_forward_ = false;
}

template <typename T>
FeatureTensor<T> PointConvOp<T>::forward(const PointCloud& in_cloud,
                                         const FeatureTensor<T>& fin) {
  if (fin.n() != in_cloud.n_points())
    throw ShapeError("PointConvOp::forward: feature rows != cloud points");
  build_cache(in_cloud, in_cloud);

  if (geometry_.mode == ConvMode::native) {
    auto r = mvmr(weights_, fin, triplets_, in_cloud.n_points(), config_);
    cached_fin_ = fin;
    fine_n_ = in_cloud.n_points();
    has_forward_ = true;
    return std::move(r.out);
  }

  // Degraded: the engine sees one row per site, gathered from each site's
  // representative point. Output rows correspond to snapped_cloud().
  const std::int64_t n_sites = snapped_.n_points();
  FeatureTensor<T> site_fin(n_sites, fin.groups(), fin.channels());
  const std::int64_t width = fin.row_width();
  for (std::int64_t m = 0; m < n_sites; ++m) {
    const T* src = fin.row(sites_.kept_index[static_cast<std::size_t>(m)]);
    T* dst = site_fin.row_mut(m);
    for (std::int64_t c = 0; c < width; ++c) dst[c] = src[c];
  }
  auto r = mvmr(weights_, site_fin, triplets_, n_sites, config_);
  cached_fin_ = std::move(site_fin);
  fine_n_ = in_cloud.n_points();
  has_forward_ = true;
  return std::move(r.out);
}

template <typename T>
FeatureTensor<T> PointConvOp<T>::forward(const PointCloud& in_cloud,
                                         const PointCloud& out_cloud,
                                         const FeatureTensor<T>& fin) {
  if (geometry_.mode != ConvMode::native)
    throw StateError("PointConvOp::forward: two-cloud forward requires native mode");
  if (fin.n() != in_cloud.n_points())
    throw ShapeError("PointConvOp::forward: feature rows != cloud points");
  build_cache(in_cloud, out_cloud);
  auto r = mvmr(weights_, fin, triplets_, out_cloud.n_points(), config_);
  cached_fin_ = fin;
  fine_n_ = in_cloud.n_points();
  has_forward_ = true;
  return std::move(r.out);
}

template <typename T>
BackwardResult<T> PointConvOp<T>::backward(const FeatureTensor<T>& gout) {
  if (!has_forward_)
    throw StateError("PointConvOp::backward: no cached forward inputs");
  const std::int64_t engine_n_out =
      geometry_.mode == ConvMode::degraded ? snapped_.n_points() : cache_key_.n_out;
  if (gout.n() != engine_n_out || gout.groups() != weights_.groups() ||
      gout.channels() != weights_.c_out())
    throw ShapeError("PointConvOp::backward: gout shape mismatch");

  auto gi = mvmr_transposed(weights_, gout, triplets_, cached_fin_.n(), config_);
  auto gw = vvor(gout, cached_fin_, triplets_, weights_.kernels(), config_);

  if (geometry_.mode == ConvMode::native)
    return {std::move(gi.out), std::move(gw.grad)};

  // Scatter site gradients back to the representative points; merged-away
  // points contributed nothing forward, so their gradient rows stay zero.
  FeatureTensor<T> grad_in(fine_n_, cached_fin_.groups(), cached_fin_.channels());
  const std::int64_t width = cached_fin_.row_width();
  for (std::int64_t m = 0; m < snapped_.n_points(); ++m) {
    const T* src = gi.out.row(m);
    T* dst = grad_in.row_mut(sites_.kept_index[static_cast<std::size_t>(m)]);
    for (std::int64_t c = 0; c < width; ++c) dst[c] = src[c];
  }
  return {std::move(grad_in), std::move(gw.grad)};
}

template <typename T>
const PointCloud& PointConvOp<T>::snapped_cloud() const {
  if (!has_cache_ || geometry_.mode != ConvMode::degraded)
    throw StateError("PointConvOp: no degraded cache");
  return snapped_;
}

template <typename T>
const DownsampleMap& PointConvOp<T>::site_map() const {
  if (!has_cache_ || geometry_.mode != ConvMode::degraded)
    throw StateError("PointConvOp: no degraded cache");
  return sites_;
}

template <typename T>
StridedResult<T> strided_block(PointConvOp<T>& op, const PointCloud& cloud,
                               const FeatureTensor<T>& fin, double voxel_size) {
  auto [coarse, map] = voxel_downsample(cloud, voxel_size);
  FeatureTensor<T> features = op.forward(cloud, coarse, fin);
  return {std::move(coarse), std::move(features), std::move(map)};
}

}  // namespace npc
