// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#if !defined(_WIN32)
#include <unistd.h>
#endif

#include "doctest.h"
#include "npconv/errors.hpp"
#include "npconv/io.hpp"
#include "npconv/point_cloud.hpp"
#include "npconv/random.hpp"
#include "npconv/synthetic.hpp"
#include "npconv/tensors.hpp"

using namespace npc;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const char* name) : path(name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("point cloud batches") {
  std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 2, 2}, {3, 3, 3}};

  SUBCASE("two sub-clouds via offsets [0, 2, 5]") {
    PointCloud c = make_point_cloud(pts, {0, 2, 5});
    CHECK(c.n_points() == 5);
    CHECK(c.n_batches() == 2);
    CHECK(c.batch_range(0) == std::pair<std::int64_t, std::int64_t>{0, 2});
    CHECK(c.batch_range(1) == std::pair<std::int64_t, std::int64_t>{2, 5});
    CHECK(c.batch_of(0) == 0);
    CHECK(c.batch_of(1) == 0);
    CHECK(c.batch_of(2) == 1);
    CHECK(c.batch_of(4) == 1);
  }

  SUBCASE("single-batch convenience") {
    PointCloud c = make_point_cloud(pts);
    CHECK(c.n_batches() == 1);
    CHECK(c.batch_range(0) == std::pair<std::int64_t, std::int64_t>{0, 5});
  }

  SUBCASE("empty batch in the middle is legal") {
    PointCloud c = make_point_cloud(pts, {0, 2, 2, 5});
    CHECK(c.n_batches() == 3);
    CHECK(c.batch_range(1).first == c.batch_range(1).second);
  }

  SUBCASE("empty cloud") {
    PointCloud c = make_point_cloud({});
    CHECK(c.n_points() == 0);
    CHECK(c.n_batches() == 1);
  }

  SUBCASE("default-constructed cloud has no batches") {
    PointCloud c;
    CHECK(c.n_points() == 0);
    CHECK(c.n_batches() == 0);
  }

  SUBCASE("malformed offsets") {
    CHECK_THROWS_AS(make_point_cloud(pts, {1, 5}), OffsetError);       // must start at 0
    CHECK_THROWS_AS(make_point_cloud(pts, {0, 3}), OffsetError);       // must end at N
    CHECK_THROWS_AS(make_point_cloud(pts, {0, 3, 2, 5}), OffsetError); // must be monotone
    CHECK_THROWS_AS(make_point_cloud(pts, {0}), OffsetError);          // needs >= 2 entries
    CHECK_THROWS_AS(make_point_cloud(pts, {}), OffsetError);
  }

  SUBCASE("non-finite coordinates rejected") {
    std::vector<Vec3> bad = {{0, 0, 0}, {1, std::nan(""), 0}};
    CHECK_THROWS_AS(make_point_cloud(bad), NonFiniteError);
    std::vector<Vec3> inf = {{std::numeric_limits<double>::infinity(), 0, 0}};
    CHECK_THROWS_AS(make_point_cloud(inf), NonFiniteError);
  }
}

TEST_CASE("feature tensor layout") {
  FeatureTensor<double> f(3, 2, 4);
  CHECK(f.n() == 3);
  CHECK(f.row_width() == 8);
  f.at(1, 1, 2) = 7.0;
  CHECK(f.row(1)[1 * 4 + 2] == 7.0);  // group-major inside the row
  CHECK(f.at(0, 0, 0) == 0.0);        // zero initialized

  CHECK_THROWS_AS(FeatureTensor<double>(2, 0, 4), ShapeError);
  CHECK_THROWS_AS((FeatureTensor<double>(2, 1, 2, {1.0, 2.0, 3.0})), ShapeError);
  CHECK_THROWS_AS((FeatureTensor<double>(1, 1, 1, {std::nan("")})), NonFiniteError);
}

TEST_CASE("weight tensor layout and transpose") {
  WeightTensor<double> w(1, 1, 2, 3);
  CHECK(w.kernels() == 1);
  w.at(0, 0, 1, 2) = 5.0;
  CHECK(w.matrix(0, 0)[1 * 3 + 2] == 5.0);  // (c, m) row-major

  WeightTensor<double> wt = w.transposed();
  CHECK(wt.c_in() == 3);
  CHECK(wt.c_out() == 2);
  CHECK(wt.at(0, 0, 2, 1) == 5.0);

  CHECK_THROWS_AS(WeightTensor<double>(2, 1, 1, 1), ShapeError);  // even t
  CHECK_THROWS_AS(WeightTensor<double>(3, 1, 0, 1), ShapeError);

  WeightTensor<double> w5(5, 2, 3, 4);
  CHECK(w5.kernels() == 125);
  CHECK(static_cast<std::int64_t>(w5.values().size()) == 125 * 2 * 3 * 4);
}

TEST_CASE("weight init scale") {
  WeightTensor<double> w = make_weights<double>(3, 2, 8, 4, 42);
  const double s = 1.0 / std::sqrt(2.0 * 8.0);
  bool nonzero = false;
  for (double v : w.values()) {
    CHECK(std::abs(v) <= s);
    if (v != 0.0) nonzero = true;
  }
  CHECK(nonzero);
}

TEST_CASE("rng reproducibility") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());

  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = c.index(13);
    CHECK(v < 13);
  }

  // Same seed, same stream, across value transforms.
  Rng d1(99), d2(99);
  CHECK(d1.uniform(-2.0, 3.0) == d2.uniform(-2.0, 3.0));
  CHECK(d1.normal() == d2.normal());
}

TEST_CASE("xyz roundtrip") {
  PointCloud cloud = gen_uniform_cube(64, 4.0, 11);
  TempFile f("test_core_roundtrip.xyz");
  write_xyz(f.path, cloud);
  PointCloud back = read_xyz(f.path);
  REQUIRE(back.n_points() == cloud.n_points());
  CHECK(back.n_batches() == 1);  // xyz carries no batch structure
  for (std::int64_t p = 0; p < cloud.n_points(); ++p)
    for (int a = 0; a < 3; ++a) CHECK(back.position(p)[a] == cloud.position(p)[a]);
}

TEST_CASE("npc roundtrip preserves batches") {
  std::vector<Vec3> pts;
  Rng rng(3);
  for (int p = 0; p < 20; ++p) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  PointCloud cloud = make_point_cloud(pts, {0, 7, 7, 20});

  TempFile f("test_core_roundtrip.npc");
  write_npc(f.path, cloud);
  PointCloud back = read_npc(f.path);
  REQUIRE(back.n_points() == 20);
  REQUIRE(back.n_batches() == 3);
  CHECK(back.batch_range(1) == std::pair<std::int64_t, std::int64_t>{7, 7});
  for (std::int64_t p = 0; p < 20; ++p)
    for (int a = 0; a < 3; ++a) CHECK(back.position(p)[a] == cloud.position(p)[a]);
}

TEST_CASE("cloud io dispatch and errors") {
  PointCloud cloud = gen_uniform_cube(8, 1.0, 1);
  TempFile f1("test_core_dispatch.xyz");
  TempFile f2("test_core_dispatch.bin");
  write_cloud(f1.path, cloud);
  write_cloud(f2.path, cloud);
  CHECK(read_cloud(f1.path).n_points() == 8);
  CHECK(read_cloud(f2.path).n_points() == 8);

  CHECK_THROWS_AS(read_cloud("test_core_missing_file.npc"), IOError);

  // Truncated binary payload must not parse.
  TempFile f3("test_core_truncated.npc");
  write_npc(f3.path, cloud);
  {
    std::FILE* fp = std::fopen(f3.path.c_str(), "rb+");
    REQUIRE(fp != nullptr);
#if defined(_WIN32)
    _chsize(_fileno(fp), 20);
#else
    REQUIRE(ftruncate(fileno(fp), 20) == 0);
#endif
    std::fclose(fp);
  }
  CHECK_THROWS_AS(read_npc(f3.path), IOError);
}

TEST_CASE("synthetic generators") {
  SUBCASE("uniform cube bounds") {
    PointCloud c = gen_uniform_cube(500, 3.0, 9);
    CHECK(c.n_points() == 500);
    for (std::int64_t p = 0; p < c.n_points(); ++p)
      for (int a = 0; a < 3; ++a) {
        CHECK(c.position(p)[a] >= 0.0);
        CHECK(c.position(p)[a] < 3.0);
      }
  }

  SUBCASE("gaussian clusters are seeded and sized") {
    PointCloud a = gen_gaussian_clusters(200, 4, 10.0, 0.5, 21);
    PointCloud b = gen_gaussian_clusters(200, 4, 10.0, 0.5, 21);
    REQUIRE(a.n_points() == 200);
    for (std::int64_t p = 0; p < a.n_points(); ++p)
      CHECK(a.position(p) == b.position(p));
  }

  SUBCASE("grid snapped emits exact voxel centers sorted by key") {
    const double v = 0.5;  // power of two: (cell + 0.5) * v is exact
    PointCloud c = gen_grid_snapped(100, 8, v, 17);
    REQUIRE(c.n_points() == 100);
    std::int64_t prev_key = -1;
    for (std::int64_t p = 0; p < c.n_points(); ++p) {
      std::int64_t cell[3];
      for (int a = 0; a < 3; ++a) {
        const double q = c.position(p)[a] / v - 0.5;
        cell[a] = static_cast<std::int64_t>(std::llround(q));
        CHECK(static_cast<double>(cell[a]) == q);  // exactly on a center
        CHECK(cell[a] >= 0);
        CHECK(cell[a] < 8);
      }
      const std::int64_t key = (cell[0] * 8 + cell[1]) * 8 + cell[2];
      CHECK(key > prev_key);  // distinct and ascending
      prev_key = key;
    }
  }
}
