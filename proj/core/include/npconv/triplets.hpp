// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npconv/point_cloud.hpp"
#include "npconv/spatial.hpp"

namespace npc {

enum class SortAxis : std::uint8_t { none = 0, by_i = 1, by_j = 2, by_k = 3 };

const char* to_string(SortAxis axis);

/// The complete compute interaction set of one convolution: entry n says
/// "output point i[n] accumulates W[k[n]] applied to input point j[n]".
/// Struct-of-arrays layout; i/j/k have equal length.
struct TripletList {
  std::vector<std::uint32_t> i;  // output point indices, < n_out
  std::vector<std::uint32_t> j;  // input point indices, < n_in
  std::vector<std::uint32_t> k;  // kernel cell indices,  < n_kernels
  std::int64_t n_out = 0;
  std::int64_t n_in = 0;
  std::int64_t n_kernels = 0;
  SortAxis sort_axis = SortAxis::none;

  std::int64_t size() const { return static_cast<std::int64_t>(i.size()); }
};

enum class ConvMode : std::uint8_t { native = 0, degraded = 1 };

/// Geometry of one convolution. `radius` and `t` drive native mode;
/// `voxel_size` (and `t`) drive degraded mode.
struct ConvGeometry {
  double radius = 1.0;
  std::int64_t t = 3;          // odd local resolution; K = t^3
  ConvMode mode = ConvMode::native;
  double voxel_size = 1.0;     // degraded mode only
};

/// Local voxelization of a neighbor around its center: the [-radius, radius]^3
/// cube is split into t cells per axis (cell edge 2*radius/t) and the cell
/// coordinates are linearized as k = ix*t^2 + iy*t + iz with
/// i_axis = clamp(floor((neighbor_axis - center_axis + radius) / (2*radius/t)), 0, t-1).
/// The clamp keeps boundary neighbors (|offset| == radius) in range.
std::int64_t local_voxel_kernel_index(const Vec3& center, const Vec3& neighbor,
                                      double radius, std::int64_t t);

/// Native construction: centers at the original output points, fixed-radius
/// search into the input points, one triplet per neighbor pair with k from
/// local_voxel_kernel_index. Output order is the search order (sorted by
/// (i, j)); sort_axis is none. Throws RadiusError / ShapeError as
/// radius_search does, ShapeError for invalid t.
TripletList build_triplets_native(const PointCloud& out_cloud, const PointCloud& in_cloud,
                                  const ConvGeometry& geom);

/// Result of degraded (voxel) construction. Sites are occupied voxels;
/// `snapped` holds one point per site at the voxel center, ordered by batch
/// then voxel key. `sites` maps original points to sites exactly like
/// voxel_downsample (kept_index selects each site's representative point).
struct DegradedBuild {
  TripletList triplets;
  PointCloud snapped;
  DownsampleMap sites;
};

/// Degraded construction: coordinates quantized to voxel centers, co-located
/// points merged into one site, neighborhoods are occupied voxels within the
/// t^3 Chebyshev stencil, and k is the linearized integer stencil offset
/// ((dx+h)*t^2 + (dy+h)*t + (dz+h) with h=(t-1)/2). Triplets are emitted per
/// output site in ascending k order. Throws VoxelError / ShapeError.
DegradedBuild build_triplets_degraded(const PointCloud& in_cloud, const ConvGeometry& geom);

/// Stable sort by the chosen axis (counting sort; ties keep input order).
/// axis none returns the input unchanged.
TripletList sort_triplets(TripletList triplets, SortAxis axis);

/// by_k when K <= min(N_in, N_out); otherwise the axis with the smallest
/// count. All ties resolve to by_k first, then by_i.
SortAxis choose_sort_axis(const TripletList& triplets);

/// Binary triplet file ("TPL1"): 24-byte little-endian header
///   bytes 0-3   magic "TPL1"
///   bytes 4-7   u32 triplet count |T|
///   bytes 8-11  u32 n_out
///   bytes 12-15 u32 n_in
///   bytes 16-19 u32 n_kernels
///   bytes 20-23 u32 sort_axis (SortAxis enum value)
/// followed by the i, j, k arrays, each |T| u32 values.
void write_triplets(const std::string& path, const TripletList& triplets);
TripletList read_triplets(const std::string& path);

}  // namespace npc
