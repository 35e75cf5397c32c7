// SPDX-License-Identifier: Apache-2.0
#include "npconv/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>

#include "npconv/errors.hpp"

namespace npc {

namespace {

struct CellKey {
  std::int64_t b, x, y, z;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

std::int64_t cell_of(double coord, double edge) {
  return static_cast<std::int64_t>(std::floor(coord / edge));
}

CellKey key_of(std::int64_t batch, const Vec3& p, double edge) {
  return {batch, cell_of(p[0], edge), cell_of(p[1], edge), cell_of(p[2], edge)};
}

double dist2(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

struct KeyedIndex {
  CellKey key;
  std::int64_t index;
};

// Sort target points by (cell key, index): cell lookups become binary
// searches and candidate order within a cell is ascending index.
std::vector<KeyedIndex> bucket_points(const PointCloud& cloud, double edge) {
  std::vector<KeyedIndex> keyed;
  keyed.reserve(static_cast<std::size_t>(cloud.n_points()));
  for (std::int64_t b = 0; b < cloud.n_batches(); ++b) {
    const auto [lo, hi] = cloud.batch_range(b);
    for (std::int64_t p = lo; p < hi; ++p)
      keyed.push_back({key_of(b, cloud.position(p), edge), p});
  }
  std::sort(keyed.begin(), keyed.end(), [](const KeyedIndex& a, const KeyedIndex& b) {
    return a.key != b.key ? a.key < b.key : a.index < b.index;
  });
  return keyed;
}

}  // namespace

NeighborList radius_search(const PointCloud& queries, const PointCloud& targets,
                           double radius) {
  if (!(radius > 0.0)) throw RadiusError("radius_search: radius must be > 0");
  if (queries.n_batches() != targets.n_batches())
    throw ShapeError("radius_search: query and target batch counts differ");

  const double r2 = radius * radius;
  const std::vector<KeyedIndex> grid = bucket_points(targets, radius);

  NeighborList out;
  out.radius = radius;
  std::vector<std::int64_t> found;
  for (std::int64_t b = 0; b < queries.n_batches(); ++b) {
    const auto [qlo, qhi] = queries.batch_range(b);
    for (std::int64_t q = qlo; q < qhi; ++q) {
      const Vec3& qp = queries.position(q);
      const CellKey center = key_of(b, qp, radius);
      found.clear();
      for (std::int64_t dx = -1; dx <= 1; ++dx)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
          for (std::int64_t dz = -1; dz <= 1; ++dz) {
            const CellKey probe{b, center.x + dx, center.y + dy, center.z + dz};
            auto lo = std::lower_bound(
                grid.begin(), grid.end(), probe,
                [](const KeyedIndex& a, const CellKey& k) { return a.key < k; });
            for (; lo != grid.end() && lo->key == probe; ++lo)
              if (dist2(qp, targets.position(lo->index)) <= r2) found.push_back(lo->index);
          }
      std::sort(found.begin(), found.end());
      for (const std::int64_t t : found) {
        out.out_index.push_back(q);
        out.in_index.push_back(t);
      }
    }
  }
  return out;
}

std::pair<PointCloud, DownsampleMap> voxel_downsample(const PointCloud& cloud,
                                                      double voxel_size) {
  if (!(voxel_size > 0.0)) throw VoxelError("voxel_downsample: voxel_size must be > 0");

  const std::vector<KeyedIndex> keyed = bucket_points(cloud, voxel_size);

  DownsampleMap map;
  map.parent_of.assign(static_cast<std::size_t>(cloud.n_points()), -1);
  std::vector<Vec3> kept_pos;
  std::vector<std::int64_t> offsets{0};
  std::int64_t prev_batch = 0;

  std::size_t run = 0;
  while (run < keyed.size()) {
    std::size_t end = run;
    while (end < keyed.size() && keyed[end].key == keyed[run].key) ++end;

    Vec3 centroid{0.0, 0.0, 0.0};
    for (std::size_t s = run; s < end; ++s) {
      const Vec3& p = cloud.position(keyed[s].index);
      centroid[0] += p[0];
      centroid[1] += p[1];
      centroid[2] += p[2];
    }
    const double inv = 1.0 / static_cast<double>(end - run);
    centroid[0] *= inv;
    centroid[1] *= inv;
    centroid[2] *= inv;

    // Nearest-to-centroid representative; runs are ascending by original
    // index, so strict improvement keeps the lowest index on distance ties.
    std::int64_t best = keyed[run].index;
    double best_d2 = dist2(cloud.position(best), centroid);
    for (std::size_t s = run + 1; s < end; ++s) {
      const double d2 = dist2(cloud.position(keyed[s].index), centroid);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = keyed[s].index;
      }
    }

    const std::int64_t m = static_cast<std::int64_t>(map.kept_index.size());
    const std::int64_t batch = keyed[run].key.b;
    while (prev_batch < batch) {
      offsets.push_back(m);
      ++prev_batch;
    }
    map.kept_index.push_back(best);
    kept_pos.push_back(cloud.position(best));
    for (std::size_t s = run; s < end; ++s) map.parent_of[static_cast<std::size_t>(keyed[s].index)] = m;
    run = end;
  }
  while (prev_batch < cloud.n_batches()) {
    offsets.push_back(static_cast<std::int64_t>(map.kept_index.size()));
    ++prev_batch;
  }

  return {make_point_cloud(std::move(kept_pos), std::move(offsets)), std::move(map)};
}

template <typename T>
FeatureTensor<T> upsample(const PointCloud& fine, const DownsampleMap& map,
                          const FeatureTensor<T>& coarse) {
  if (static_cast<std::int64_t>(map.parent_of.size()) != fine.n_points())
    throw ShapeError("upsample: map does not cover the fine cloud");
  if (static_cast<std::int64_t>(map.kept_index.size()) != coarse.n())
    throw ShapeError("upsample: coarse features do not match the map");
  FeatureTensor<T> out(fine.n_points(), coarse.groups(), coarse.channels());
  const std::int64_t w = coarse.row_width();
  for (std::int64_t p = 0; p < fine.n_points(); ++p) {
    const T* src = coarse.row(map.parent_of[static_cast<std::size_t>(p)]);
    T* dst = out.row_mut(p);
    for (std::int64_t c = 0; c < w; ++c) dst[c] = src[c];
  }
  return out;
}

template FeatureTensor<float> upsample<float>(const PointCloud&, const DownsampleMap&,
                                              const FeatureTensor<float>&);
template FeatureTensor<double> upsample<double>(const PointCloud&, const DownsampleMap&,
                                                const FeatureTensor<double>&);

}  // namespace npc
