// SPDX-License-Identifier: Apache-2.0
#include "npconv/triplets.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>

#include "npconv/errors.hpp"

namespace npc {

const char* to_string(SortAxis axis) {
  switch (axis) {
    case SortAxis::none: return "none";
    case SortAxis::by_i: return "by_i";
    case SortAxis::by_j: return "by_j";
    case SortAxis::by_k: return "by_k";
  }
  return "?";
}

namespace {

void validate_t(std::int64_t t) {
  if (t < 1 || t % 2 == 0)
    throw ShapeError("conv geometry: kernel resolution t must be odd and >= 1");
}

std::int64_t clamp_cell(double v, std::int64_t t) {
  const auto c = static_cast<std::int64_t>(std::floor(v));
  return std::clamp<std::int64_t>(c, 0, t - 1);
}

struct SiteKey {
  std::int64_t b, x, y, z;
  friend auto operator<=>(const SiteKey&, const SiteKey&) = default;
};

}  // namespace

std::int64_t local_voxel_kernel_index(const Vec3& center, const Vec3& neighbor,
                                      double radius, std::int64_t t) {
  validate_t(t);
  if (!(radius > 0.0)) throw RadiusError("local_voxel_kernel_index: radius must be > 0");
  const double cell = 2.0 * radius / static_cast<double>(t);
  const std::int64_t ix = clamp_cell((neighbor[0] - center[0] + radius) / cell, t);
  const std::int64_t iy = clamp_cell((neighbor[1] - center[1] + radius) / cell, t);
  const std::int64_t iz = clamp_cell((neighbor[2] - center[2] + radius) / cell, t);
  return (ix * t + iy) * t + iz;
}

TripletList build_triplets_native(const PointCloud& out_cloud, const PointCloud& in_cloud,
                                  const ConvGeometry& geom) {
  validate_t(geom.t);
  const NeighborList pairs = radius_search(out_cloud, in_cloud, geom.radius);

  TripletList t;
  t.n_out = out_cloud.n_points();
  t.n_in = in_cloud.n_points();
  t.n_kernels = geom.t * geom.t * geom.t;
  t.sort_axis = SortAxis::none;
  t.i.reserve(static_cast<std::size_t>(pairs.size()));
  t.j.reserve(static_cast<std::size_t>(pairs.size()));
  t.k.reserve(static_cast<std::size_t>(pairs.size()));
  for (std::int64_t n = 0; n < pairs.size(); ++n) {
    const std::int64_t i = pairs.out_index[static_cast<std::size_t>(n)];
    const std::int64_t j = pairs.in_index[static_cast<std::size_t>(n)];
    const std::int64_t k = local_voxel_kernel_index(out_cloud.position(i),
                                                    in_cloud.position(j), geom.radius, geom.t);
    t.i.push_back(static_cast<std::uint32_t>(i));
    t.j.push_back(static_cast<std::uint32_t>(j));
    t.k.push_back(static_cast<std::uint32_t>(k));
  }
  return t;
}

DegradedBuild build_triplets_degraded(const PointCloud& in_cloud, const ConvGeometry& geom) {
  validate_t(geom.t);
  if (!(geom.voxel_size > 0.0))
    throw VoxelError("build_triplets_degraded: voxel_size must be > 0");

  // Site selection reuses the downsample grouping (one site per occupied
  // voxel, representative = nearest-centroid point), then snaps each site to
  // its voxel center.
  auto [kept, sites] = voxel_downsample(in_cloud, geom.voxel_size);

  const double v = geom.voxel_size;
  const std::int64_t n_sites = kept.n_points();

  std::vector<Vec3> snapped_pos(static_cast<std::size_t>(n_sites));
  std::map<SiteKey, std::int64_t> occupied;
  std::vector<SiteKey> site_keys(static_cast<std::size_t>(n_sites));
  for (std::int64_t b = 0; b < kept.n_batches(); ++b) {
    const auto [lo, hi] = kept.batch_range(b);
    for (std::int64_t s = lo; s < hi; ++s) {
      const Vec3& p = kept.position(s);
      const SiteKey key{b, static_cast<std::int64_t>(std::floor(p[0] / v)),
                        static_cast<std::int64_t>(std::floor(p[1] / v)),
                        static_cast<std::int64_t>(std::floor(p[2] / v))};
      site_keys[static_cast<std::size_t>(s)] = key;
      occupied.emplace(key, s);
      snapped_pos[static_cast<std::size_t>(s)] = {
          (static_cast<double>(key.x) + 0.5) * v, (static_cast<double>(key.y) + 0.5) * v,
          (static_cast<double>(key.z) + 0.5) * v};
    }
  }

  const std::int64_t t = geom.t;
  const std::int64_t h = (t - 1) / 2;
  TripletList tl;
  tl.n_out = n_sites;
  tl.n_in = n_sites;
  tl.n_kernels = t * t * t;
  tl.sort_axis = SortAxis::none;
  for (std::int64_t s = 0; s < n_sites; ++s) {
    const SiteKey& c = site_keys[static_cast<std::size_t>(s)];
    for (std::int64_t dx = -h; dx <= h; ++dx)
      for (std::int64_t dy = -h; dy <= h; ++dy)
        for (std::int64_t dz = -h; dz <= h; ++dz) {
          const auto it = occupied.find({c.b, c.x + dx, c.y + dy, c.z + dz});
          if (it == occupied.end()) continue;
          const std::int64_t k = ((dx + h) * t + (dy + h)) * t + (dz + h);
          tl.i.push_back(static_cast<std::uint32_t>(s));
          tl.j.push_back(static_cast<std::uint32_t>(it->second));
          tl.k.push_back(static_cast<std::uint32_t>(k));
        }
  }

  std::vector<std::int64_t> offsets(kept.batch_offsets().begin(), kept.batch_offsets().end());
  return {std::move(tl), make_point_cloud(std::move(snapped_pos), std::move(offsets)),
          std::move(sites)};
}

TripletList sort_triplets(TripletList triplets, SortAxis axis) {
  if (axis == SortAxis::none || triplets.size() <= 1) {
    triplets.sort_axis = axis;
    return triplets;
  }
  const std::vector<std::uint32_t>* key = nullptr;
  std::int64_t range = 0;
  switch (axis) {
    case SortAxis::by_i: key = &triplets.i; range = triplets.n_out; break;
    case SortAxis::by_j: key = &triplets.j; range = triplets.n_in; break;
    case SortAxis::by_k: key = &triplets.k; range = triplets.n_kernels; break;
    case SortAxis::none: break;
  }
  const std::size_t n = static_cast<std::size_t>(triplets.size());

  // Counting sort: stable by construction, O(|T| + range).
  std::vector<std::size_t> starts(static_cast<std::size_t>(range) + 1, 0);
  for (std::size_t p = 0; p < n; ++p) ++starts[(*key)[p] + 1];
  for (std::size_t b = 1; b < starts.size(); ++b) starts[b] += starts[b - 1];

  TripletList out;
  out.n_out = triplets.n_out;
  out.n_in = triplets.n_in;
  out.n_kernels = triplets.n_kernels;
  out.sort_axis = axis;
  out.i.resize(n);
  out.j.resize(n);
  out.k.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t dst = starts[(*key)[p]]++;
    out.i[dst] = triplets.i[p];
    out.j[dst] = triplets.j[p];
    out.k[dst] = triplets.k[p];
  }
  return out;
}

SortAxis choose_sort_axis(const TripletList& triplets) {
  const std::int64_t k = triplets.n_kernels;
  const std::int64_t lo = std::min(triplets.n_in, triplets.n_out);
  if (k <= lo) return SortAxis::by_k;
  // k is not the smallest count; pick the smallest of the remaining two,
  // ties toward by_i.
  return triplets.n_out <= triplets.n_in ? SortAxis::by_i : SortAxis::by_j;
}

}  // namespace npc
