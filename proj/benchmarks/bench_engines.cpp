// SPDX-License-Identifier: Apache-2.0
#include <cstdint>

#include <benchmark/benchmark.h>

#include "npconv/engine.hpp"
#include "npconv/synthetic.hpp"
#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"
#include "npconv/vvor.hpp"

using namespace npc;

namespace {

constexpr std::int64_t kTriplets = 200000;
constexpr std::int64_t kPoints = 2048;
constexpr std::int64_t kKernels = 27;  // t = 3
constexpr std::int64_t kCin = 32;
constexpr std::int64_t kCout = 32;

struct Workload {
  TripletList triplets;
  WeightTensor<double> w64;
  WeightTensor<float> w32;
  FeatureTensor<double> f64;
  FeatureTensor<float> f32;
  FeatureTensor<double> g64;  // upstream gradient rows for vvor
  FeatureTensor<float> g32;
};

// One shared workload per process; every benchmark sees identical inputs.
const Workload& workload() {
  static const Workload w = [] {
    Workload wl;
    wl.triplets = sort_triplets(
        gen_synthetic_triplets(kTriplets, kPoints, kPoints, kKernels, 71), SortAxis::by_k);
    wl.w64 = make_weights<double>(3, 1, kCin, kCout, 72);
    wl.w32 = make_weights<float>(3, 1, kCin, kCout, 72);
    wl.f64 = gen_features<double>(kPoints, 1, kCin, 73);
    wl.f32 = gen_features<float>(kPoints, 1, kCin, 73);
    wl.g64 = gen_features<double>(kPoints, 1, kCout, 74);
    wl.g32 = gen_features<float>(kPoints, 1, kCout, 74);
    return wl;
  }();
  return w;
}

template <typename T>
const WeightTensor<T>& weights();
template <>
const WeightTensor<double>& weights() { return workload().w64; }
template <>
const WeightTensor<float>& weights() { return workload().w32; }

template <typename T>
const FeatureTensor<T>& features();
template <>
const FeatureTensor<double>& features() { return workload().f64; }
template <>
const FeatureTensor<float>& features() { return workload().f32; }

template <typename T>
const FeatureTensor<T>& gradients();
template <>
const FeatureTensor<double>& gradients() { return workload().g64; }
template <>
const FeatureTensor<float>& gradients() { return workload().g32; }

void report(benchmark::State& state, const AccessCounters& c, std::uint64_t aux) {
  state.SetItemsProcessed(state.iterations() * kTriplets);
  state.counters["w_reads"] = static_cast<double>(c.w_reads);
  state.counters["fin_reads"] = static_cast<double>(c.fin_reads);
  state.counters["fout_writes"] = static_cast<double>(c.fout_atomic_writes);
  state.counters["aux_bytes"] = static_cast<double>(aux);
}

template <typename T>
void BM_mvmr_naive(benchmark::State& state) {
  ExecConfig cfg;
  cfg.executor = Executor::naive;
  cfg.workers = 1;
  AccessCounters c;
  std::uint64_t aux = 0;
  for (auto _ : state) {
    auto r = mvmr(weights<T>(), features<T>(), workload().triplets, kPoints, cfg);
    benchmark::DoNotOptimize(r.out.values().data());
    c = r.counters;
    aux = r.aux_bytes;
  }
  report(state, c, aux);
}

// Arg 0 is the group length L; the list is by_k sorted.
template <typename T>
void BM_mvmr_grouped(benchmark::State& state) {
  ExecConfig cfg;
  cfg.executor = Executor::grouped;
  cfg.L = state.range(0);
  cfg.workers = 1;
  AccessCounters c;
  std::uint64_t aux = 0;
  for (auto _ : state) {
    auto r = mvmr(weights<T>(), features<T>(), workload().triplets, kPoints, cfg);
    benchmark::DoNotOptimize(r.out.values().data());
    c = r.counters;
    aux = r.aux_bytes;
  }
  report(state, c, aux);
}

template <typename T>
void BM_mvmr_transposed_grouped(benchmark::State& state) {
  ExecConfig cfg;
  cfg.executor = Executor::grouped;
  cfg.L = state.range(0);
  cfg.workers = 1;
  AccessCounters c;
  std::uint64_t aux = 0;
  for (auto _ : state) {
    auto r = mvmr_transposed(weights<T>(), gradients<T>(), workload().triplets, kPoints, cfg);
    benchmark::DoNotOptimize(r.out.values().data());
    c = r.counters;
    aux = r.aux_bytes;
  }
  report(state, c, aux);
}

template <typename T>
void BM_vvor_naive(benchmark::State& state) {
  ExecConfig cfg;
  cfg.executor = Executor::naive;
  cfg.workers = 1;
  AccessCounters c;
  std::uint64_t aux = 0;
  for (auto _ : state) {
    auto r = vvor(gradients<T>(), features<T>(), workload().triplets, kKernels, cfg);
    benchmark::DoNotOptimize(r.grad.values().data());
    c = r.counters;
    aux = r.aux_bytes;
  }
  report(state, c, aux);
}

template <typename T>
void BM_vvor_grouped(benchmark::State& state) {
  ExecConfig cfg;
  cfg.executor = Executor::grouped;
  cfg.L = state.range(0);
  cfg.workers = 1;
  AccessCounters c;
  std::uint64_t aux = 0;
  for (auto _ : state) {
    auto r = vvor(gradients<T>(), features<T>(), workload().triplets, kKernels, cfg);
    benchmark::DoNotOptimize(r.grad.values().data());
    c = r.counters;
    aux = r.aux_bytes;
  }
  report(state, c, aux);
}

// Arg 0 selects the axis: 1 by_i, 2 by_j, 3 by_k.
void BM_sort_triplets(benchmark::State& state) {
  const auto axis = static_cast<SortAxis>(state.range(0));
  TripletList unsorted = gen_synthetic_triplets(kTriplets, kPoints, kPoints, kKernels, 75);
  for (auto _ : state) {
    TripletList s = sort_triplets(unsorted, axis);
    benchmark::DoNotOptimize(s.i.data());
  }
  state.SetItemsProcessed(state.iterations() * kTriplets);
}

}  // namespace

BENCHMARK_TEMPLATE(BM_mvmr_naive, float);
BENCHMARK_TEMPLATE(BM_mvmr_naive, double);
BENCHMARK_TEMPLATE(BM_mvmr_grouped, float)->Arg(16)->Arg(64)->Arg(128)->Arg(512);
BENCHMARK_TEMPLATE(BM_mvmr_grouped, double)->Arg(16)->Arg(64)->Arg(128)->Arg(512);
BENCHMARK_TEMPLATE(BM_mvmr_transposed_grouped, float)->Arg(128);
BENCHMARK_TEMPLATE(BM_mvmr_transposed_grouped, double)->Arg(128);
BENCHMARK_TEMPLATE(BM_vvor_naive, float);
BENCHMARK_TEMPLATE(BM_vvor_naive, double);
BENCHMARK_TEMPLATE(BM_vvor_grouped, float)->Arg(128);
BENCHMARK_TEMPLATE(BM_vvor_grouped, double)->Arg(128);
BENCHMARK(BM_sort_triplets)->Arg(1)->Arg(2)->Arg(3);

BENCHMARK_MAIN();
