// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "npconv/point_cloud.hpp"
#include "npconv/tensors.hpp"

namespace npc {

/// Paired (query, neighbor) index lists, sorted by (out_index, in_index).
/// Pairs never cross batch boundaries.
struct NeighborList {
  std::vector<std::int64_t> out_index;
  std::vector<std::int64_t> in_index;
  double radius = 0.0;

  std::int64_t size() const { return static_cast<std::int64_t>(out_index.size()); }
};

/// Result of voxel_downsample. kept_index[m] is the original index of output
/// point m; parent_of[p] is the output index whose voxel contains original
/// point p, so parent_of[kept_index[m]] == m.
struct DownsampleMap {
  std::vector<std::int64_t> kept_index;
  std::vector<std::int64_t> parent_of;
};

/// All (i, j) with |targets[j] - queries[i]| <= radius (closed ball, exact L2)
/// and matching batch. Every query with targets==queries includes itself.
/// Throws RadiusError on radius <= 0, ShapeError on batch count mismatch.
///
/// Implementation contract: targets are bucketed on a grid of cell edge
/// `radius`; each query probes its 27 adjacent cells via binary search and
/// filters candidates with an exact squared-distance test, so results match
/// the brute-force definition exactly while staying near-linear for bounded
/// neighborhood sizes.
NeighborList radius_search(const PointCloud& queries, const PointCloud& targets,
                           double radius);

/// Keeps one representative point per occupied voxel: the point closest to
/// the per-voxel centroid, ties broken by lowest original index. Kept
/// coordinates are bit-identical to the originals (no snapping). Output is
/// ordered by batch, then lexicographic integer voxel key (floor(c/voxel) per
/// axis). Throws VoxelError on voxel_size <= 0.
std::pair<PointCloud, DownsampleMap> voxel_downsample(const PointCloud& cloud,
                                                      double voxel_size);

/// Copies each coarse feature row to all fine points mapped to it:
/// out.row(p) = coarse.row(map.parent_of[p]).
template <typename T>
FeatureTensor<T> upsample(const PointCloud& fine, const DownsampleMap& map,
                          const FeatureTensor<T>& coarse);

}  // namespace npc
