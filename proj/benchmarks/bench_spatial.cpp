// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdint>

#include <benchmark/benchmark.h>

#include "npconv/spatial.hpp"
#include "npconv/synthetic.hpp"
#include "npconv/triplets.hpp"

using namespace npc;

namespace {

// Unit-density cube: extent n^(1/3), so a fixed radius keeps the expected
// neighbor count constant as n grows.
PointCloud unit_density_cloud(std::int64_t n, std::uint64_t seed) {
  return gen_uniform_cube(n, std::cbrt(static_cast<double>(n)), seed);
}

constexpr double kRadius = 1.7;  // ~20 expected neighbors at unit density

void BM_radius_search(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  PointCloud cloud = unit_density_cloud(n, 81);
  std::size_t pairs = 0;
  for (auto _ : state) {
    NeighborList nl = radius_search(cloud, cloud, kRadius);
    benchmark::DoNotOptimize(nl.out_index.data());
    pairs = nl.out_index.size();
  }
  state.SetItemsProcessed(state.iterations() * n);
  state.counters["pairs"] = static_cast<double>(pairs);
}

void BM_voxel_downsample(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  PointCloud cloud = unit_density_cloud(n, 82);
  std::int64_t kept = 0;
  for (auto _ : state) {
    auto [down, map] = voxel_downsample(cloud, 1.0);
    benchmark::DoNotOptimize(map.kept_index.data());
    kept = down.n_points();
  }
  state.SetItemsProcessed(state.iterations() * n);
  state.counters["kept"] = static_cast<double>(kept);
}

void BM_build_triplets_native(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  PointCloud cloud = unit_density_cloud(n, 83);
  ConvGeometry geom;
  geom.radius = kRadius;
  geom.t = 3;
  std::size_t triplets = 0;
  for (auto _ : state) {
    TripletList t = build_triplets_native(cloud, cloud, geom);
    benchmark::DoNotOptimize(t.i.data());
    triplets = t.size();
  }
  state.SetItemsProcessed(state.iterations() * n);
  state.counters["triplets"] = static_cast<double>(triplets);
}

void BM_build_triplets_degraded(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  PointCloud cloud = unit_density_cloud(n, 84);
  ConvGeometry geom;
  geom.mode = ConvMode::degraded;
  geom.t = 3;
  geom.voxel_size = 1.0;
  std::size_t triplets = 0;
  for (auto _ : state) {
    DegradedBuild b = build_triplets_degraded(cloud, geom);
    benchmark::DoNotOptimize(b.triplets.i.data());
    triplets = b.triplets.size();
  }
  state.SetItemsProcessed(state.iterations() * n);
  state.counters["triplets"] = static_cast<double>(triplets);
}

}  // namespace

BENCHMARK(BM_radius_search)->Arg(1024)->Arg(4096)->Arg(16384);
BENCHMARK(BM_voxel_downsample)->Arg(4096)->Arg(65536);
BENCHMARK(BM_build_triplets_native)->Arg(1024)->Arg(4096)->Arg(16384);
BENCHMARK(BM_build_triplets_degraded)->Arg(4096)->Arg(65536);

BENCHMARK_MAIN();
