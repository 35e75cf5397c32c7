// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "npconv/point_cloud.hpp"

namespace npc {

/// ASCII XYZ: one "x y z" line per point, 17 significant digits (doubles
/// round-trip exactly). The format carries no batch structure; reading
/// yields a single batch.
void write_xyz(const std::string& path, const PointCloud& cloud);
PointCloud read_xyz(const std::string& path);

/// Binary cloud container ("NPC1"), little-endian:
///   bytes 0-3   magic "NPC1"
///   bytes 4-7   u32 point count N
///   bytes 8-11  u32 batch count B
///   bytes 12-15 u32 reserved (0)
/// followed by B+1 u32 batch offsets, then N float64 (x, y, z) triples.
void write_npc(const std::string& path, const PointCloud& cloud);
PointCloud read_npc(const std::string& path);

/// Dispatch on extension: ".xyz" text, anything else the binary container.
void write_cloud(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud(const std::string& path);

}  // namespace npc
