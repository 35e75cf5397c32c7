// SPDX-License-Identifier: Apache-2.0
#include "npconv/synthetic.hpp"

#include <algorithm>
#include <numeric>

#include "npconv/errors.hpp"
#include "npconv/random.hpp"

namespace npc {

PointCloud gen_uniform_cube(std::int64_t n, double extent, std::uint64_t seed) {
  if (n < 0) throw ShapeError("gen_uniform_cube: n must be >= 0");
  if (!(extent > 0.0)) throw DomainError("gen_uniform_cube: extent must be > 0");
  Rng rng(seed);
  std::vector<Vec3> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p[0] = rng.uniform(0.0, extent);
    p[1] = rng.uniform(0.0, extent);
    p[2] = rng.uniform(0.0, extent);
  }
  return make_point_cloud(std::move(pts));
}

PointCloud gen_gaussian_clusters(std::int64_t n, std::int64_t clusters, double extent,
                                 double sigma, std::uint64_t seed) {
  if (n < 0) throw ShapeError("gen_gaussian_clusters: n must be >= 0");
  if (clusters < 1) throw DomainError("gen_gaussian_clusters: clusters must be >= 1");
  if (!(extent > 0.0) || !(sigma > 0.0))
    throw DomainError("gen_gaussian_clusters: extent and sigma must be > 0");
  Rng rng(seed);
  std::vector<Vec3> centers(static_cast<std::size_t>(clusters));
  for (auto& c : centers) {
    c[0] = rng.uniform(0.0, extent);
    c[1] = rng.uniform(0.0, extent);
    c[2] = rng.uniform(0.0, extent);
  }
  std::vector<Vec3> pts(static_cast<std::size_t>(n));
  for (std::int64_t p = 0; p < n; ++p) {
    const Vec3& c = centers[static_cast<std::size_t>(p % clusters)];
    pts[static_cast<std::size_t>(p)] = {c[0] + sigma * rng.normal(),
                                        c[1] + sigma * rng.normal(),
                                        c[2] + sigma * rng.normal()};
  }
  return make_point_cloud(std::move(pts));
}

PointCloud gen_grid_snapped(std::int64_t n, std::int64_t cells, double voxel_size,
                            std::uint64_t seed) {
  if (n < 0) throw ShapeError("gen_grid_snapped: n must be >= 0");
  if (cells < 1) throw DomainError("gen_grid_snapped: cells must be >= 1");
  if (!(voxel_size > 0.0)) throw VoxelError("gen_grid_snapped: voxel_size must be > 0");
  const std::int64_t total = cells * cells * cells;
  if (n > total) throw DomainError("gen_grid_snapped: n exceeds cells^3 distinct voxels");

  // Partial Fisher-Yates over the flattened cell ids: first n entries are a
  // uniform sample without replacement.
  std::vector<std::int64_t> ids(static_cast<std::size_t>(total));
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  Rng rng(seed);
  for (std::int64_t s = 0; s < n; ++s) {
    const std::int64_t pick = s + static_cast<std::int64_t>(
                                      rng.index(static_cast<std::uint64_t>(total - s)));
    std::swap(ids[static_cast<std::size_t>(s)], ids[static_cast<std::size_t>(pick)]);
  }
  ids.resize(static_cast<std::size_t>(n));
  // Flattened id order (x, y, z lexicographic) is exactly voxel-key order.
  std::sort(ids.begin(), ids.end());

  std::vector<Vec3> pts(static_cast<std::size_t>(n));
  for (std::int64_t s = 0; s < n; ++s) {
    const std::int64_t id = ids[static_cast<std::size_t>(s)];
    const std::int64_t x = id / (cells * cells);
    const std::int64_t y = (id / cells) % cells;
    const std::int64_t z = id % cells;
    pts[static_cast<std::size_t>(s)] = {(static_cast<double>(x) + 0.5) * voxel_size,
                                        (static_cast<double>(y) + 0.5) * voxel_size,
                                        (static_cast<double>(z) + 0.5) * voxel_size};
  }
  return make_point_cloud(std::move(pts));
}

TripletList gen_synthetic_triplets(std::int64_t n, std::int64_t n_out, std::int64_t n_in,
                                   std::int64_t n_kernels, std::uint64_t seed) {
  if (n < 0) throw ShapeError("gen_synthetic_triplets: n must be >= 0");
  if (n_out < 1 || n_in < 1 || n_kernels < 1)
    throw ShapeError("gen_synthetic_triplets: index spaces must be >= 1");

  Rng rng(seed);
  struct Entry {
    std::uint32_t i, j, k;
  };
  std::vector<Entry> entries(static_cast<std::size_t>(n));
  for (auto& e : entries) {
    e.i = static_cast<std::uint32_t>(rng.index(static_cast<std::uint64_t>(n_out)));
    e.j = static_cast<std::uint32_t>(rng.index(static_cast<std::uint64_t>(n_in)));
    e.k = static_cast<std::uint32_t>(rng.index(static_cast<std::uint64_t>(n_kernels)));
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });

  TripletList t;
  t.n_out = n_out;
  t.n_in = n_in;
  t.n_kernels = n_kernels;
  t.sort_axis = SortAxis::none;
  t.i.reserve(entries.size());
  t.j.reserve(entries.size());
  t.k.reserve(entries.size());
  for (const Entry& e : entries) {
    t.i.push_back(e.i);
    t.j.push_back(e.j);
    t.k.push_back(e.k);
  }
  return t;
}

}  // namespace npc
