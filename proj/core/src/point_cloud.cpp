// SPDX-License-Identifier: Apache-2.0
#include "npconv/point_cloud.hpp"

#include <cmath>
#include <string>

#include "npconv/errors.hpp"

namespace npc {

PointCloud::PointCloud(std::vector<Vec3> positions, std::vector<std::int64_t> batch_offsets)
    : positions_(std::move(positions)), offsets_(std::move(batch_offsets)) {}

std::int64_t PointCloud::batch_of(std::int64_t p) const {
  for (std::int64_t b = 0; b + 1 < static_cast<std::int64_t>(offsets_.size()); ++b)
    if (p < offsets_[static_cast<std::size_t>(b) + 1]) return b;
  return n_batches() - 1;
}

PointCloud make_point_cloud(std::vector<Vec3> positions,
                            std::vector<std::int64_t> batch_offsets) {
  const auto n = static_cast<std::int64_t>(positions.size());
  if (batch_offsets.size() < 2)
    throw OffsetError("batch_offsets needs at least [0, N]");
  if (batch_offsets.front() != 0)
    throw OffsetError("batch_offsets must start at 0");
  if (batch_offsets.back() != n)
    throw OffsetError("batch_offsets must end at the point count (" + std::to_string(n) + ")");
  for (std::size_t b = 1; b < batch_offsets.size(); ++b)
    if (batch_offsets[b] < batch_offsets[b - 1])
      throw OffsetError("batch_offsets must be monotone non-decreasing");
  for (const Vec3& p : positions)
    for (const double c : p)
      if (!std::isfinite(c)) throw NonFiniteError("point coordinate is NaN or infinite");
  return PointCloud(std::move(positions), std::move(batch_offsets));
}

PointCloud make_point_cloud(std::vector<Vec3> positions) {
  const auto n = static_cast<std::int64_t>(positions.size());
  return make_point_cloud(std::move(positions), {0, n});
}

}  // namespace npc
