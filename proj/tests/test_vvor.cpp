// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "npconv/engine.hpp"
#include "npconv/errors.hpp"
#include "npconv/gradcheck.hpp"
#include "npconv/oracle.hpp"
#include "npconv/synthetic.hpp"
#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"
#include "npconv/vvor.hpp"

using namespace npc;

namespace {

TripletList make_list(std::vector<std::uint32_t> i, std::vector<std::uint32_t> j,
                      std::vector<std::uint32_t> k, std::int64_t n_out, std::int64_t n_in,
                      std::int64_t n_kernels) {
  TripletList t;
  t.i = std::move(i);
  t.j = std::move(j);
  t.k = std::move(k);
  t.n_out = n_out;
  t.n_in = n_in;
  t.n_kernels = n_kernels;
  return t;
}

ExecConfig cfg_of(Executor e, bool det = true, std::int64_t L = 128, int workers = 2) {
  ExecConfig c;
  c.executor = e;
  c.deterministic = det;
  c.L = L;
  c.workers = workers;
  return c;
}

// Independent run-length model of the grouped scan: upstream gradient rows
// reload on i-runs, input rows on j-runs, tile flushes on k-runs.
AccessCounters model_counters(const TripletList& t, std::int64_t L, std::int64_t groups,
                              std::int64_t cig, std::int64_t cog) {
  AccessCounters c;
  const std::int64_t n = t.size();
  for (std::int64_t t0 = 0; t0 < n; t0 += L) {
    const std::int64_t t1 = std::min(n, t0 + L);
    std::uint64_t i_runs = 1, j_runs = 1, k_runs = 1;
    for (std::int64_t x = t0 + 1; x < t1; ++x) {
      i_runs += t.i[x] != t.i[x - 1];
      j_runs += t.j[x] != t.j[x - 1];
      k_runs += t.k[x] != t.k[x - 1];
    }
    c.w_reads += i_runs * static_cast<std::uint64_t>(groups * cog);
    c.fin_reads += j_runs * static_cast<std::uint64_t>(groups * cig);
    c.fout_atomic_writes += k_runs * static_cast<std::uint64_t>(groups * cog * cig);
  }
  return c;
}

}  // namespace

TEST_CASE("single triplet accumulates one outer product") {
  FeatureTensor<double> gout(1, 1, 2, {1.0, 2.0});
  FeatureTensor<double> fin(1, 1, 2, {3.0, 4.0});
  TripletList t = make_list({0}, {0}, {0}, 1, 1, 1);

  for (Executor e : {Executor::naive, Executor::grouped}) {
    VvorResult<double> r = vvor(gout, fin, t, 1, cfg_of(e));
    // (m, c) layout: row m=0 is g_0 * fin, row m=1 is g_1 * fin.
    CHECK(r.grad.at(0, 0, 0, 0) == 3.0);
    CHECK(r.grad.at(0, 0, 0, 1) == 4.0);
    CHECK(r.grad.at(0, 0, 1, 0) == 6.0);
    CHECK(r.grad.at(0, 0, 1, 1) == 8.0);
  }
}

TEST_CASE("repeated triplets double the contribution") {
  FeatureTensor<double> gout(1, 1, 2, {1.0, 2.0});
  FeatureTensor<double> fin(1, 1, 2, {3.0, 4.0});
  TripletList t = make_list({0, 0}, {0, 0}, {0, 0}, 1, 1, 1);

  for (Executor e : {Executor::naive, Executor::grouped}) {
    VvorResult<double> r = vvor(gout, fin, t, 1, cfg_of(e));
    CHECK(r.grad.at(0, 0, 1, 1) == 16.0);
  }
}

TEST_CASE("gradient is linear in the upstream gradient") {
  const std::int64_t n = 40;
  FeatureTensor<double> gout = gen_features<double>(n, 2, 6, 201);
  FeatureTensor<double> fin = gen_features<double>(n, 2, 4, 202);
  TripletList t = gen_synthetic_triplets(800, n, n, 27, 203);

  FeatureTensor<double> gout2 = gout;
  for (double& v : gout2.values_mut()) v *= 2.0;  // power of two: exact in fp

  for (Executor e : {Executor::naive, Executor::grouped}) {
    VvorResult<double> a = vvor(gout, fin, t, 27, cfg_of(e, true, 64, 4));
    VvorResult<double> b = vvor(gout2, fin, t, 27, cfg_of(e, true, 64, 4));
    for (std::size_t x = 0; x < a.grad.values().size(); ++x)
      CHECK(b.grad.values()[x] == 2.0 * a.grad.values()[x]);
  }
}

TEST_CASE("vvor matches the oracle weight gradient") {
  for (std::int64_t groups : {std::int64_t{1}, std::int64_t{2}}) {
    const std::int64_t n = 50, cig = 5, cog = 9;
    WeightTensor<double> w = make_weights<double>(3, groups, cig, cog, 211);
    FeatureTensor<double> fin = gen_features<double>(n, groups, cig, 212);
    FeatureTensor<double> gout = gen_features<double>(n, groups, cog, 213);
    TripletList base = gen_synthetic_triplets(1200, n, n, 27, 214);
    oracle::DenseOracleResult ref = oracle::dense_conv_oracle(w, fin, base, n, &gout);
    REQUIRE(ref.grad_w.has_value());

    for (SortAxis axis : {SortAxis::none, SortAxis::by_k, SortAxis::by_i}) {
      TripletList t = sort_triplets(base, axis);
      for (Executor e : {Executor::naive, Executor::grouped}) {
        for (bool det : {false, true}) {
          VvorResult<double> r = vvor(gout, fin, t, 27, cfg_of(e, det, 64, 4));
          CHECK(rel_error(r.grad.values(), ref.grad_w->values()) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("counters follow the run length model") {
  const std::int64_t n = 40, groups = 2, cig = 3, cog = 5;
  FeatureTensor<double> gout = gen_features<double>(n, groups, cog, 221);
  FeatureTensor<double> fin = gen_features<double>(n, groups, cig, 222);
  TripletList base = gen_synthetic_triplets(700, n, n, 27, 223);

  for (SortAxis axis : {SortAxis::none, SortAxis::by_k}) {
    TripletList t = sort_triplets(base, axis);
    for (std::int64_t L : {std::int64_t{1}, std::int64_t{33}, std::int64_t{128}}) {
      AccessCounters want = model_counters(t, L, groups, cig, cog);
      for (bool det : {false, true}) {
        VvorResult<double> r = vvor(gout, fin, t, 27, cfg_of(Executor::grouped, det, L, 4));
        CHECK(r.counters == want);
      }
    }
  }

  // Naive: one reload of everything per triplet.
  VvorResult<double> nv = vvor(gout, fin, base, 27, cfg_of(Executor::naive, false, 128, 4));
  const std::uint64_t T = static_cast<std::uint64_t>(base.size());
  CHECK(nv.counters.w_reads == T * groups * cog);
  CHECK(nv.counters.fin_reads == T * groups * cig);
  CHECK(nv.counters.fout_atomic_writes == T * groups * cog * cig);
}

TEST_CASE("sorted lists flush once per distinct kernel per group") {
  const std::int64_t n = 60, cig = 4, cog = 6, L = 32;
  FeatureTensor<double> gout = gen_features<double>(n, 1, cog, 231);
  FeatureTensor<double> fin = gen_features<double>(n, 1, cig, 232);
  TripletList t = sort_triplets(gen_synthetic_triplets(4000, n, n, 27, 233), SortAxis::by_k);

  VvorResult<double> r = vvor(gout, fin, t, 27, cfg_of(Executor::grouped, false, L, 4));
  oracle::GroupUniqueK gk = oracle::group_unique_k(t, L);
  CHECK(r.counters.fout_atomic_writes ==
        gk.sum_unique * static_cast<std::uint64_t>(cig * cog));

  // Unsorted flushes at least as often.
  VvorResult<double> ru = vvor(gout, fin, sort_triplets(t, SortAxis::by_j), 27,
                               cfg_of(Executor::grouped, false, L, 4));
  CHECK(ru.counters.fout_atomic_writes >= r.counters.fout_atomic_writes);
}

TEST_CASE("deterministic mode is byte identical across worker counts") {
  const std::int64_t n = 64;
  FeatureTensor<double> gout = gen_features<double>(n, 2, 6, 241);
  FeatureTensor<double> fin = gen_features<double>(n, 2, 5, 242);
  TripletList base = gen_synthetic_triplets(2500, n, n, 27, 243);

  for (SortAxis axis : {SortAxis::none, SortAxis::by_k}) {
    TripletList t = sort_triplets(base, axis);
    for (Executor e : {Executor::naive, Executor::grouped}) {
      VvorResult<double> first = vvor(gout, fin, t, 27, cfg_of(e, true, 41, 1));
      for (int workers : {2, 4, 8}) {
        VvorResult<double> r = vvor(gout, fin, t, 27, cfg_of(e, true, 41, workers));
        REQUIRE(r.grad.values().size() == first.grad.values().size());
        CHECK(std::memcmp(r.grad.values().data(), first.grad.values().data(),
                          r.grad.values().size() * sizeof(double)) == 0);
      }
    }
  }
}

TEST_CASE("aux bytes follow the documented formulas") {
  const std::int64_t n = 30, groups = 2, cig = 4, cog = 6;
  const std::int64_t row_in = groups * cig, row_out = groups * cog;
  const std::int64_t tile = groups * cig * cog;
  FeatureTensor<double> gout = gen_features<double>(n, groups, cog, 251);
  FeatureTensor<double> fin = gen_features<double>(n, groups, cig, 252);
  TripletList t = gen_synthetic_triplets(5000, n, n, 27, 253);

  VvorResult<double> nd = vvor(gout, fin, t, 27, cfg_of(Executor::naive, true, 128, 4));
  CHECK(nd.aux_bytes == static_cast<std::uint64_t>(tile) * sizeof(double));

  // 5000 triplets -> 5 chunks of 1024; active = min(workers, chunks).
  VvorResult<double> nn = vvor(gout, fin, t, 27, cfg_of(Executor::naive, false, 128, 3));
  CHECK(nn.aux_bytes == 3u * tile * sizeof(double));

  VvorResult<double> gn = vvor(gout, fin, t, 27, cfg_of(Executor::grouped, false, 128, 4));
  CHECK(gn.aux_bytes ==
        4u * static_cast<std::uint64_t>(row_out + row_in + tile) * sizeof(double));

  // Independent of the triplet count.
  TripletList t2 = gen_synthetic_triplets(50000, n, n, 27, 254);
  VvorResult<double> gn2 = vvor(gout, fin, t2, 27, cfg_of(Executor::grouped, false, 128, 4));
  CHECK(gn2.aux_bytes == gn.aux_bytes);
}

TEST_CASE("gradient transposes into the weight layout") {
  VvorResult<double> r = [&] {
    FeatureTensor<double> gout(1, 1, 2, {1.0, 2.0});
    FeatureTensor<double> fin(1, 1, 3, {5.0, 6.0, 7.0});
    TripletList t = make_list({0}, {0}, {0}, 1, 1, 1);
    return vvor(gout, fin, t, 1, cfg_of(Executor::grouped));
  }();
  WeightTensor<double> wt = r.grad.to_weight_tensor(1);
  for (std::int64_t m = 0; m < 2; ++m)
    for (std::int64_t c = 0; c < 3; ++c) CHECK(wt.at(0, 0, c, m) == r.grad.at(0, 0, m, c));

  CHECK_THROWS_AS(r.grad.to_weight_tensor(3), ShapeError);  // 27 != 1 kernel
}

TEST_CASE("empty list and validation errors") {
  FeatureTensor<double> gout = gen_features<double>(4, 1, 3, 261);
  FeatureTensor<double> fin = gen_features<double>(4, 1, 2, 262);

  TripletList empty = make_list({}, {}, {}, 0, 0, 27);
  VvorResult<double> r = vvor(gout, fin, empty, 27, cfg_of(Executor::grouped));
  for (double v : r.grad.values()) CHECK(v == 0.0);
  CHECK(r.counters == AccessCounters{});

  TripletList t = make_list({0}, {0}, {0}, 1, 1, 27);
  FeatureTensor<double> wrong_g = gen_features<double>(4, 2, 3, 263);
  CHECK_THROWS_AS(vvor(wrong_g, fin, t, 27, cfg_of(Executor::grouped)), ShapeError);
  CHECK_THROWS_AS(vvor(gout, fin, t, 0, cfg_of(Executor::grouped)), ShapeError);

  TripletList bad_k = make_list({0}, {0}, {30}, 1, 1, 27);
  CHECK_THROWS_AS(vvor(gout, fin, bad_k, 27, cfg_of(Executor::grouped)), IndexError);
  TripletList bad_i = make_list({4}, {0}, {0}, 4, 1, 27);  // i beyond gradient rows
  CHECK_THROWS_AS(vvor(gout, fin, bad_i, 27, cfg_of(Executor::grouped)), IndexError);

  ExecConfig bad_cfg = cfg_of(Executor::grouped);
  bad_cfg.L = 0;
  CHECK_THROWS_AS(vvor(gout, fin, t, 27, bad_cfg), ShapeError);
}
