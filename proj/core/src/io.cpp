// SPDX-License-Identifier: Apache-2.0
#include "npconv/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "npconv/errors.hpp"
#include "npconv/triplets.hpp"

namespace npc {

namespace {

// Little-endian fixed-width helpers. The formats are defined little-endian;
// this library targets little-endian hosts and asserts nothing else.
void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw IOError(std::string("truncated ") + what);
  return v;
}

}  // namespace

void write_xyz(const std::string& path, const PointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw IOError("cannot open for writing: " + path);
  char line[96];
  for (const Vec3& p : cloud.positions()) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
    os << line;
  }
  if (!os) throw IOError("write failed: " + path);
}

PointCloud read_xyz(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IOError("cannot open: " + path);
  std::vector<Vec3> pts;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Vec3 p{};
    if (!(ss >> p[0] >> p[1] >> p[2]))
      throw IOError(path + ":" + std::to_string(line_no) + ": expected 'x y z'");
    pts.push_back(p);
  }
  return make_point_cloud(std::move(pts));
}

void write_npc(const std::string& path, const PointCloud& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot open for writing: " + path);
  os.write("NPC1", 4);
  put_u32(os, static_cast<std::uint32_t>(cloud.n_points()));
  put_u32(os, static_cast<std::uint32_t>(cloud.n_batches()));
  put_u32(os, 0);
  for (const std::int64_t off : cloud.batch_offsets())
    put_u32(os, static_cast<std::uint32_t>(off));
  os.write(reinterpret_cast<const char*>(cloud.positions().data()),
           static_cast<std::streamsize>(cloud.n_points() * 3 * sizeof(double)));
  if (!os) throw IOError("write failed: " + path);
}

PointCloud read_npc(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IOError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "NPC1", 4) != 0)
    throw IOError(path + ": bad magic, expected NPC1");
  const std::uint32_t n = get_u32(is, "point count");
  const std::uint32_t b = get_u32(is, "batch count");
  (void)get_u32(is, "reserved field");
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(b) + 1);
  for (auto& off : offsets) off = get_u32(is, "batch offset");
  std::vector<Vec3> pts(n);
  if (!is.read(reinterpret_cast<char*>(pts.data()),
               static_cast<std::streamsize>(std::size_t(n) * 3 * sizeof(double))))
    throw IOError(path + ": truncated position block");
  return make_point_cloud(std::move(pts), std::move(offsets));
}

void write_cloud(const std::string& path, const PointCloud& cloud) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".xyz") == 0)
    write_xyz(path, cloud);
  else
    write_npc(path, cloud);
}

PointCloud read_cloud(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".xyz") == 0) return read_xyz(path);
  return read_npc(path);
}

void write_triplets(const std::string& path, const TripletList& triplets) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot open for writing: " + path);
  os.write("TPL1", 4);
  put_u32(os, static_cast<std::uint32_t>(triplets.size()));
  put_u32(os, static_cast<std::uint32_t>(triplets.n_out));
  put_u32(os, static_cast<std::uint32_t>(triplets.n_in));
  put_u32(os, static_cast<std::uint32_t>(triplets.n_kernels));
  put_u32(os, static_cast<std::uint32_t>(triplets.sort_axis));
  const auto write_arr = [&os](const std::vector<std::uint32_t>& a) {
    os.write(reinterpret_cast<const char*>(a.data()),
             static_cast<std::streamsize>(a.size() * sizeof(std::uint32_t)));
  };
  write_arr(triplets.i);
  write_arr(triplets.j);
  write_arr(triplets.k);
  if (!os) throw IOError("write failed: " + path);
}

TripletList read_triplets(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IOError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "TPL1", 4) != 0)
    throw IOError(path + ": bad magic, expected TPL1");
  TripletList t;
  const std::uint32_t n = get_u32(is, "triplet count");
  t.n_out = get_u32(is, "n_out");
  t.n_in = get_u32(is, "n_in");
  t.n_kernels = get_u32(is, "n_kernels");
  const std::uint32_t axis = get_u32(is, "sort_axis");
  if (axis > 3) throw IOError(path + ": invalid sort_axis value");
  t.sort_axis = static_cast<SortAxis>(axis);
  const auto read_arr = [&is, &path, n](std::vector<std::uint32_t>& a) {
    a.resize(n);
    if (!is.read(reinterpret_cast<char*>(a.data()),
                 static_cast<std::streamsize>(std::size_t(n) * sizeof(std::uint32_t))))
      throw IOError(path + ": truncated index array");
  };
  read_arr(t.i);
  read_arr(t.j);
  read_arr(t.k);
  for (std::uint32_t n_idx = 0; n_idx < n; ++n_idx) {
    if (t.i[n_idx] >= t.n_out || t.j[n_idx] >= t.n_in || t.k[n_idx] >= t.n_kernels)
      throw IOError(path + ": triplet index out of declared range");
  }
  return t;
}

}  // namespace npc
