// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace npc {

using Vec3 = std::array<double, 3>;

/// Batched irregular point set. Positions are continuous coordinates (meters);
/// batch b owns the contiguous index range [batch_offsets[b], batch_offsets[b+1]).
/// Offsets are monotone non-decreasing, start at 0, and end at n_points().
/// Containers are immutable after construction.
class PointCloud {
 public:
  PointCloud() : offsets_{0} {}
  PointCloud(std::vector<Vec3> positions, std::vector<std::int64_t> batch_offsets);

  std::int64_t n_points() const { return static_cast<std::int64_t>(positions_.size()); }
  std::int64_t n_batches() const { return static_cast<std::int64_t>(offsets_.size()) - 1; }

  std::span<const Vec3> positions() const { return positions_; }
  std::span<const std::int64_t> batch_offsets() const { return offsets_; }

  const Vec3& position(std::int64_t p) const { return positions_[static_cast<std::size_t>(p)]; }

  /// Half-open point index range of batch b.
  std::pair<std::int64_t, std::int64_t> batch_range(std::int64_t b) const {
    return {offsets_[static_cast<std::size_t>(b)], offsets_[static_cast<std::size_t>(b) + 1]};
  }

  /// Batch id of point p (linear scan; offsets are tiny).
  std::int64_t batch_of(std::int64_t p) const;

 private:
  std::vector<Vec3> positions_;
  std::vector<std::int64_t> offsets_;
};

/// Validates and constructs a cloud. Throws OffsetError for malformed batch
/// offsets and NonFiniteError for NaN/inf coordinates.
PointCloud make_point_cloud(std::vector<Vec3> positions,
                            std::vector<std::int64_t> batch_offsets);

/// Single-batch convenience overload: offsets become [0, N].
PointCloud make_point_cloud(std::vector<Vec3> positions);

}  // namespace npc
