// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "npconv/point_cloud.hpp"
#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"

namespace npc {

/// n points uniform in [0, extent)^3, one batch.
PointCloud gen_uniform_cube(std::int64_t n, double extent, std::uint64_t seed);

/// n points split evenly over `clusters` Gaussian modes with the given sigma;
/// centers are drawn uniformly in [0, extent)^3. One batch.
PointCloud gen_gaussian_clusters(std::int64_t n, std::int64_t clusters, double extent,
                                 double sigma, std::uint64_t seed);

/// n distinct voxel-center points on a cells^3 grid: every coordinate is an
/// exact multiple of voxel_size plus half (coordinate = (cell + 0.5) *
/// voxel_size). Sampled without replacement, emitted sorted by voxel key.
/// Exactness holds bit-for-bit when voxel_size is a power of two.
PointCloud gen_grid_snapped(std::int64_t n, std::int64_t cells, double voxel_size,
                            std::uint64_t seed);

/// Synthetic triplet workload: n uniform (i, j, k) draws over n_out x n_in x
/// n_kernels, emitted in builder order (sorted by (i, j)), sort_axis none.
TripletList gen_synthetic_triplets(std::int64_t n, std::int64_t n_out, std::int64_t n_in,
                                   std::int64_t n_kernels, std::uint64_t seed);

/// Seeded features uniform in [-1, 1].
template <typename T>
FeatureTensor<T> gen_features(std::int64_t n, std::int64_t groups, std::int64_t channels,
                              std::uint64_t seed) {
  FeatureTensor<T> f(n, groups, channels);
  Rng rng(seed);
  for (T& v : f.values_mut()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return f;
}

}  // namespace npc
