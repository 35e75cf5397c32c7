// SPDX-License-Identifier: Apache-2.0
//
// npconv command line tool: workload generation, correctness verification
// against the brute-force oracles, executor benchmarking with access-counter
// CSV reports, and triplet file inspection.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "npconv/conv_op.hpp"
#include "npconv/engine.hpp"
#include "npconv/errors.hpp"
#include "npconv/gradcheck.hpp"
#include "npconv/io.hpp"
#include "npconv/oracle.hpp"
#include "npconv/parallel.hpp"
#include "npconv/random.hpp"
#include "npconv/synthetic.hpp"
#include "npconv/triplets.hpp"
#include "npconv/vvor.hpp"

namespace {

bool env_deterministic() {
  const char* v = std::getenv("NPCONV_DETERMINISTIC");
  if (v == nullptr) return false;
  const std::string s(v);
  return s == "1" || s == "true" || s == "on" || s == "yes";
}

npc::SortAxis parse_axis(const std::string& s) {
  if (s == "none") return npc::SortAxis::none;
  if (s == "by_i") return npc::SortAxis::by_i;
  if (s == "by_j") return npc::SortAxis::by_j;
  if (s == "by_k") return npc::SortAxis::by_k;
  throw CLI::ValidationError("sort axis must be one of none, by_i, by_j, by_k");
}

npc::Executor parse_executor(const std::string& s) {
  if (s == "naive") return npc::Executor::naive;
  if (s == "grouped") return npc::Executor::grouped;
  throw CLI::ValidationError("executor must be naive or grouped");
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOpts {
  std::string kind = "uniform_cube";
  std::int64_t n = 1000;
  std::uint64_t seed = 1;
  std::string out;
  double extent = 10.0;
  std::int64_t clusters = 4;
  double sigma = 0.5;
  std::int64_t cells = 32;
  double voxel_size = 0.5;
};

int run_generate(const GenerateOpts& o) {
  npc::PointCloud cloud;
  if (o.kind == "uniform_cube") {
    cloud = npc::gen_uniform_cube(o.n, o.extent, o.seed);
  } else if (o.kind == "gaussian_clusters") {
    cloud = npc::gen_gaussian_clusters(o.n, o.clusters, o.extent, o.sigma, o.seed);
  } else if (o.kind == "grid_snapped") {
    cloud = npc::gen_grid_snapped(o.n, o.cells, o.voxel_size, o.seed);
  } else {
    std::cerr << "unknown kind: " << o.kind << "\n";
    return 2;
  }
  npc::write_cloud(o.out, cloud);
  std::printf("wrote %s: %" PRId64 " points, kind=%s, seed=%" PRIu64 "\n", o.out.c_str(),
              cloud.n_points(), o.kind.c_str(), o.seed);
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOpts {
  std::int64_t seeds = 20;
  std::uint64_t seed_base = 1;
  std::int64_t gradcheck_cases = 5;
  bool fault_inject = false;
  int workers = 0;
};

struct CaseDims {
  std::int64_t n_out, n_in, n_triplets, t, groups, cig, cog;
};

CaseDims draw_case_dims(npc::Rng& rng) {
  static constexpr std::int64_t t_choices[] = {1, 3, 5};
  static constexpr std::int64_t g_choices[] = {1, 2, 4};
  CaseDims d;
  d.n_out = 1 + static_cast<std::int64_t>(rng.index(512));
  d.n_in = 1 + static_cast<std::int64_t>(rng.index(512));
  d.t = t_choices[rng.index(3)];
  d.groups = g_choices[rng.index(3)];
  d.cig = 1 + static_cast<std::int64_t>(rng.index(64));
  d.cog = 1 + static_cast<std::int64_t>(rng.index(64));
  d.n_triplets = 1 + static_cast<std::int64_t>(rng.index(8192));
  // Cap per-case work so sweeps stay fast regardless of the draw.
  const std::int64_t cost = d.groups * d.cig * d.cog;
  d.n_triplets = std::min(d.n_triplets, std::max<std::int64_t>(1, 4'000'000 / cost));
  return d;
}

// Casts a double tensor to float, and the float values back to double so a
// double oracle can consume numerically identical inputs. Isolates engine
// accumulation error from input representation error.
struct SinglePair {
  npc::FeatureTensor<float> f32;
  npc::FeatureTensor<double> back;
};

SinglePair to_single(const npc::FeatureTensor<double>& src) {
  npc::FeatureTensor<float> f32(src.n(), src.groups(), src.channels());
  npc::FeatureTensor<double> back(src.n(), src.groups(), src.channels());
  for (std::size_t p = 0; p < src.values().size(); ++p) {
    f32.values_mut()[p] = static_cast<float>(src.values()[p]);
    back.values_mut()[p] = static_cast<double>(f32.values_mut()[p]);
  }
  return {std::move(f32), std::move(back)};
}

struct SingleWeights {
  npc::WeightTensor<float> f32;
  npc::WeightTensor<double> back;
};

SingleWeights to_single(const npc::WeightTensor<double>& src) {
  npc::WeightTensor<float> f32(src.t(), src.groups(), src.c_in(), src.c_out());
  npc::WeightTensor<double> back(src.t(), src.groups(), src.c_in(), src.c_out());
  for (std::size_t p = 0; p < src.values().size(); ++p) {
    f32.values_mut()[p] = static_cast<float>(src.values()[p]);
    back.values_mut()[p] = static_cast<double>(f32.values_mut()[p]);
  }
  return {std::move(f32), std::move(back)};
}

// One oracle-equivalence case: both executors, three sort axes, double and
// single precision, vs the dense oracle. Returns the worst double-path error.
bool verify_case(std::uint64_t seed, int workers, bool fault_inject, double* worst_rel) {
  npc::Rng rng(seed);
  CaseDims d = draw_case_dims(rng);
  if (fault_inject) {
    d.t = 3;
    d.n_triplets = std::max<std::int64_t>(d.n_triplets, 64);
  }
  const std::int64_t K = d.t * d.t * d.t;

  auto triplets = npc::gen_synthetic_triplets(d.n_triplets, d.n_out, d.n_in, K, rng.bits());
  const auto weights = npc::make_weights<double>(d.t, d.groups, d.cig, d.cog, rng.bits());
  const auto fin = npc::gen_features<double>(d.n_in, d.groups, d.cig, rng.bits());
  const auto ref = npc::oracle::dense_conv_oracle(weights, fin, triplets, d.n_out);
  const auto ws = to_single(weights);
  const auto fs = to_single(fin);
  const auto ref32 = npc::oracle::dense_conv_oracle(ws.back, fs.back, triplets, d.n_out);

  if (fault_inject) {
    // Simulate an engine-side indexing bug: one triplet lands on the wrong
    // kernel cell. The oracle keeps the intact list, so outputs must diverge.
    triplets.k[triplets.k.size() / 2] =
        static_cast<std::uint32_t>((triplets.k[triplets.k.size() / 2] + 1) % K);
  }

  npc::ExecConfig cfg;
  cfg.workers = workers;
  bool ok = true;
  double worst = 0.0;
  for (const npc::Executor ex : {npc::Executor::naive, npc::Executor::grouped}) {
    for (const npc::SortAxis axis :
         {npc::SortAxis::none, npc::SortAxis::by_i, npc::SortAxis::by_k}) {
      cfg.executor = ex;
      const auto sorted = npc::sort_triplets(triplets, axis);
      const auto got = npc::mvmr(weights, fin, sorted, d.n_out, cfg);
      worst = std::max(worst, npc::rel_error(got.out.values(), ref.f_out.values()));
      const auto got32 = npc::mvmr(ws.f32, fs.f32, sorted, d.n_out, cfg);
      ok = ok && npc::rel_error_f32(got32.out.values(), ref32.f_out.values()) <= 1e-5;
    }
  }
  *worst_rel = worst;
  return ok && worst <= 1e-12;
}

bool gradcheck_case(std::uint64_t seed, int workers, double* worst_rel) {
  npc::Rng rng(seed);
  static constexpr std::int64_t t_choices[] = {1, 3};
  const std::int64_t t = t_choices[rng.index(2)];
  const std::int64_t K = t * t * t;
  const std::int64_t groups = 1 + static_cast<std::int64_t>(rng.index(2));
  const std::int64_t cig = 1 + static_cast<std::int64_t>(rng.index(4));
  const std::int64_t cog = 1 + static_cast<std::int64_t>(rng.index(4));
  const std::int64_t n_in = 4 + static_cast<std::int64_t>(rng.index(16));
  const std::int64_t n_out = 4 + static_cast<std::int64_t>(rng.index(16));
  const std::int64_t n_triplets = 16 + static_cast<std::int64_t>(rng.index(256));

  const auto triplets = npc::sort_triplets(
      npc::gen_synthetic_triplets(n_triplets, n_out, n_in, K, rng.bits()), npc::SortAxis::by_k);
  const auto weights = npc::make_weights<double>(t, groups, cig, cog, rng.bits());
  const auto fin = npc::gen_features<double>(n_in, groups, cig, rng.bits());
  const auto proj = npc::gen_features<double>(n_out, groups, cog, rng.bits());

  npc::ExecConfig cfg;
  cfg.workers = workers;
  const auto gin = npc::mvmr_transposed(weights, proj, triplets, n_in, cfg);
  const auto gw = npc::vvor(proj, fin, triplets, K, cfg);
  const auto r = npc::finite_difference_check(weights, fin, triplets, n_out, proj, gin.out,
                                              gw.grad, 1e-6);
  *worst_rel = std::max(r.max_rel_w, r.max_rel_in);
  return *worst_rel <= 1e-6;
}

int run_verify(const VerifyOpts& o) {
  int failures = 0;
  for (std::int64_t s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed = o.seed_base + static_cast<std::uint64_t>(s);
    double rel = 0.0;
    const bool ok = verify_case(seed, o.workers, o.fault_inject, &rel);
    std::printf("%s oracle-equivalence seed=%" PRIu64 " rel=%.3e\n", ok ? "pass" : "FAIL",
                seed, rel);
    failures += ok ? 0 : 1;
  }
  if (!o.fault_inject) {
    for (std::int64_t s = 0; s < o.gradcheck_cases; ++s) {
      const std::uint64_t seed = o.seed_base + 1000 + static_cast<std::uint64_t>(s);
      double rel = 0.0;
      const bool ok = gradcheck_case(seed, o.workers, &rel);
      std::printf("%s gradcheck seed=%" PRIu64 " rel=%.3e\n", ok ? "pass" : "FAIL", seed, rel);
      failures += ok ? 0 : 1;
    }
  }
  if (failures > 0) {
    std::printf("%d case(s) failed\n", failures);
    return 1;
  }
  std::printf("all checks passed\n");
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  std::string workload;  // .tpl file; empty = synthetic
  std::int64_t triplets = 1'000'000;
  std::int64_t n_out = 4096;
  std::int64_t n_in = 4096;
  std::int64_t t = 3;
  std::uint64_t seed = 1;
  std::int64_t groups = 1;
  std::int64_t c_in = 64;
  std::int64_t c_out = 128;
  std::vector<std::string> executors = {"naive", "grouped"};
  std::vector<std::string> axes = {"none", "by_k"};
  std::vector<std::int64_t> L = {128};
  std::vector<std::int64_t> b_out = {32};
  std::vector<std::int64_t> b_in = {32};
  std::int64_t reps = 3;
  std::string kernel = "mvmr";  // mvmr | vvor | both
  std::string out;              // CSV path; empty = stdout
  bool deterministic = env_deterministic();
  int workers = 0;
  bool median_only = false;
};

struct BenchRow {
  std::string kernel, executor, axis;
  std::int64_t L, b_out, b_in, rep;
  std::int64_t n_triplets, groups, c_in, c_out;
  int workers;
  bool deterministic;
  std::uint64_t wall_ns;
  npc::AccessCounters counters;
  std::uint64_t aux_bytes;
  std::uint64_t pred_naive, pred_grouped;
};

const char* kCsvHeader =
    "kernel,executor,sort_axis,L,b_out,b_in,repetition,triplets,groups,c_in,c_out,workers,"
    "deterministic,wall_time_ns,w_reads,fin_reads,fout_atomic_writes,aux_bytes,"
    "pred_naive,pred_grouped";

void write_row(std::FILE* f, const BenchRow& r) {
  std::fprintf(f,
               "%s,%s,%s,%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64
               ",%" PRId64 ",%" PRId64 ",%d,%d,%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64
               ",%" PRIu64 ",%" PRIu64 ",%" PRIu64 "\n",
               r.kernel.c_str(), r.executor.c_str(), r.axis.c_str(), r.L, r.b_out, r.b_in,
               r.rep, r.n_triplets, r.groups, r.c_in, r.c_out, r.workers,
               r.deterministic ? 1 : 0, r.wall_ns, r.counters.w_reads, r.counters.fin_reads,
               r.counters.fout_atomic_writes, r.aux_bytes, r.pred_naive, r.pred_grouped);
}

int run_bench(const BenchOpts& o) {
  if (o.reps < 3)
    throw CLI::ValidationError("--reps must be >= 3 (median-of-repetitions timing)");

  npc::TripletList base;
  if (!o.workload.empty()) {
    base = npc::read_triplets(o.workload);
  } else {
    base = npc::gen_synthetic_triplets(o.triplets, o.n_out, o.n_in, o.t * o.t * o.t, o.seed);
  }
  std::fprintf(stderr, "workload: %" PRId64 " triplets, n_out=%" PRId64 ", n_in=%" PRId64
                       ", K=%" PRId64 "\n",
               base.size(), base.n_out, base.n_in, base.n_kernels);

  const auto weights =
      npc::make_weights<double>(o.t, o.groups, o.c_in, o.c_out, o.seed + 17);
  const auto fin = npc::gen_features<double>(base.n_in, o.groups, o.c_in, o.seed + 33);
  const auto gout = npc::gen_features<double>(base.n_out, o.groups, o.c_out, o.seed + 49);
  if (base.n_kernels != weights.kernels())
    throw npc::ShapeError("bench: workload kernel count does not match t^3");

  std::FILE* f = stdout;
  if (!o.out.empty()) {
    f = std::fopen(o.out.c_str(), "w");
    if (f == nullptr) throw npc::IOError("bench: cannot open output file: " + o.out);
  }
  std::fprintf(f, "%s\n", kCsvHeader);

  std::vector<std::string> kernels;
  if (o.kernel == "both") {
    kernels = {"mvmr", "vvor"};
  } else if (o.kernel == "mvmr" || o.kernel == "vvor") {
    kernels = {o.kernel};
  } else {
    throw CLI::ValidationError("--kernel must be mvmr, vvor, or both");
  }

  const std::uint64_t g = static_cast<std::uint64_t>(o.groups);
  int rc = 0;
  for (const std::string& axis_name : o.axes) {
    const npc::SortAxis axis = parse_axis(axis_name);
    const auto sorted = npc::sort_triplets(base, axis);
    for (const std::string& kernel : kernels) {
      for (const std::string& exec_name : o.executors) {
        for (const std::int64_t L : o.L)
          for (const std::int64_t bo : o.b_out)
            for (const std::int64_t bi : o.b_in) {
              npc::ExecConfig cfg;
              cfg.executor = parse_executor(exec_name);
              cfg.L = L;
              cfg.b_out = bo;
              cfg.b_in = bi;
              cfg.deterministic = o.deterministic;
              cfg.workers = o.workers;

              BenchRow row;
              row.kernel = kernel;
              row.executor = exec_name;
              row.axis = axis_name;
              row.L = L;
              row.b_out = bo;
              row.b_in = bi;
              row.n_triplets = sorted.size();
              row.groups = o.groups;
              row.c_in = o.c_in;
              row.c_out = o.c_out;
              row.workers = npc::resolve_workers(o.workers);
              row.deterministic = o.deterministic;
              row.pred_naive = g * npc::predict_access_naive(
                                       static_cast<std::uint64_t>(sorted.size()),
                                       static_cast<std::uint64_t>(o.c_in),
                                       static_cast<std::uint64_t>(o.c_out));
              row.pred_grouped = g * npc::predict_access_grouped(
                                         static_cast<std::uint64_t>(sorted.size()),
                                         static_cast<std::uint64_t>(L),
                                         static_cast<std::uint64_t>(o.c_in),
                                         static_cast<std::uint64_t>(o.c_out));

              std::vector<std::uint64_t> times;
              npc::AccessCounters first_ctr;
              for (std::int64_t rep = 0; rep < o.reps; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                npc::AccessCounters ctr;
                std::uint64_t aux = 0;
                if (kernel == "mvmr") {
                  const auto r = npc::mvmr(weights, fin, sorted, sorted.n_out, cfg);
                  ctr = r.counters;
                  aux = r.aux_bytes;
                } else {
                  const auto r = npc::vvor(gout, fin, sorted, sorted.n_kernels, cfg);
                  ctr = r.counters;
                  aux = r.aux_bytes;
                }
                const auto t1 = std::chrono::steady_clock::now();
                const auto ns = static_cast<std::uint64_t>(
                    std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
                times.push_back(ns);
                if (rep == 0) {
                  first_ctr = ctr;
                } else if (!(ctr == first_ctr)) {
                  std::fprintf(stderr,
                               "counter drift across repetitions (%s %s %s)\n",
                               kernel.c_str(), exec_name.c_str(), axis_name.c_str());
                  rc = 1;
                }
                row.rep = rep;
                row.wall_ns = ns;
                row.counters = ctr;
                row.aux_bytes = aux;
                if (!o.median_only) write_row(f, row);
              }
              // Median row, tagged repetition = -1.
              std::sort(times.begin(), times.end());
              row.rep = -1;
              row.wall_ns = times[times.size() / 2];
              write_row(f, row);
            }
      }
    }
  }
  if (f != stdout) std::fclose(f);
  return rc;
}

// ---------------------------------------------------------------------------
// triplets

struct TripletsOpts {
  std::string cloud;
  std::string in_file;
  std::string out_file;
  double radius = 0.6;
  std::int64_t t = 3;
  std::string mode = "native";
  double voxel_size = 0.5;
  std::string sort = "by_k";
  bool check = false;
};

int run_triplets(const TripletsOpts& o) {
  npc::TripletList tl;
  if (!o.cloud.empty()) {
    const auto cloud = npc::read_cloud(o.cloud);
    npc::ConvGeometry geom;
    geom.radius = o.radius;
    geom.t = o.t;
    geom.voxel_size = o.voxel_size;
    if (o.mode == "native") {
      geom.mode = npc::ConvMode::native;
      tl = npc::build_triplets_native(cloud, cloud, geom);
    } else if (o.mode == "degraded") {
      geom.mode = npc::ConvMode::degraded;
      tl = npc::build_triplets_degraded(cloud, geom).triplets;
    } else {
      throw CLI::ValidationError("--mode must be native or degraded");
    }
    tl = npc::sort_triplets(std::move(tl), parse_axis(o.sort));
    if (!o.out_file.empty()) npc::write_triplets(o.out_file, tl);
  } else if (!o.in_file.empty()) {
    tl = npc::read_triplets(o.in_file);
    if (!o.out_file.empty())
      npc::write_triplets(o.out_file, npc::sort_triplets(tl, parse_axis(o.sort)));
  } else {
    throw CLI::ValidationError("triplets: need --cloud (dump) or --in (replay)");
  }

  std::printf("triplets=%" PRId64 " n_out=%" PRId64 " n_in=%" PRId64 " n_kernels=%" PRId64
              " sort_axis=%s\n",
              tl.size(), tl.n_out, tl.n_in, tl.n_kernels, npc::to_string(tl.sort_axis));

  if (o.check && tl.size() > 0) {
    // Replay through both executors and compare against the oracle.
    const auto weights = npc::make_weights<double>(o.t, 1, 8, 8, 7);
    if (weights.kernels() != tl.n_kernels)
      throw npc::ShapeError("triplets --check: kernel count does not match --t");
    const auto fin = npc::gen_features<double>(tl.n_in, 1, 8, 11);
    const auto ref = npc::oracle::dense_conv_oracle(weights, fin, tl, tl.n_out);
    npc::ExecConfig cfg;
    for (const npc::Executor ex : {npc::Executor::naive, npc::Executor::grouped}) {
      cfg.executor = ex;
      const auto got = npc::mvmr(weights, fin, tl, tl.n_out, cfg);
      const double rel = npc::rel_error(got.out.values(), ref.f_out.values());
      std::printf("%s executor=%s rel=%.3e\n", rel <= 1e-12 ? "pass" : "FAIL",
                  npc::to_string(ex), rel);
      if (rel > 1e-12) return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point convolution engine workbench"};
  app.set_config("--config", "", "key=value config file");
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* cmd_gen = app.add_subcommand("generate", "write a synthetic point cloud file");
  cmd_gen->add_option("--kind", gen.kind,
                      "uniform_cube | gaussian_clusters | grid_snapped");
  cmd_gen->add_option("--n", gen.n, "point count");
  cmd_gen->add_option("--seed", gen.seed, "rng seed");
  cmd_gen->add_option("--out", gen.out, "output path (.xyz text or .npc binary)")
      ->required();
  cmd_gen->add_option("--extent", gen.extent, "cube edge / cluster center range");
  cmd_gen->add_option("--clusters", gen.clusters, "gaussian_clusters: mode count");
  cmd_gen->add_option("--sigma", gen.sigma, "gaussian_clusters: per-mode sigma");
  cmd_gen->add_option("--cells", gen.cells, "grid_snapped: grid cells per axis");
  cmd_gen->add_option("--voxel-size", gen.voxel_size, "grid_snapped: voxel edge");

  VerifyOpts ver;
  auto* cmd_ver = app.add_subcommand("verify", "run oracle-equivalence and gradient checks");
  cmd_ver->add_option("--seeds", ver.seeds, "number of oracle-equivalence cases");
  cmd_ver->add_option("--seed-base", ver.seed_base, "first seed of the sweep");
  cmd_ver->add_option("--gradcheck-cases", ver.gradcheck_cases,
                      "number of finite-difference cases");
  cmd_ver->add_flag("--fault-inject", ver.fault_inject,
                    "corrupt one triplet per case; verification must fail");
  cmd_ver->add_option("--workers", ver.workers, "worker threads (0 = auto)");

  BenchOpts bench;
  auto* cmd_bench = app.add_subcommand("bench", "sweep executors and emit CSV");
  cmd_bench->add_option("--workload", bench.workload, "triplet file (.tpl); default synthetic");
  cmd_bench->add_option("--triplets", bench.triplets, "synthetic workload size");
  cmd_bench->add_option("--n-out", bench.n_out, "synthetic output point count");
  cmd_bench->add_option("--n-in", bench.n_in, "synthetic input point count");
  cmd_bench->add_option("--t", bench.t, "kernel resolution (K = t^3)");
  cmd_bench->add_option("--seed", bench.seed, "rng seed");
  cmd_bench->add_option("--groups", bench.groups, "group count G");
  cmd_bench->add_option("--c-in", bench.c_in, "input channels per group");
  cmd_bench->add_option("--c-out", bench.c_out, "output channels per group");
  cmd_bench->add_option("--executors", bench.executors, "naive, grouped")
      ->delimiter(',');
  cmd_bench->add_option("--axes", bench.axes, "sort axes: none, by_i, by_j, by_k")
      ->delimiter(',');
  cmd_bench->add_option("--L", bench.L, "group lengths")->delimiter(',');
  cmd_bench->add_option("--b-out", bench.b_out, "output tile extents")->delimiter(',');
  cmd_bench->add_option("--b-in", bench.b_in, "input tile extents")->delimiter(',');
  cmd_bench->add_option("--reps", bench.reps, "repetitions (>= 3, median reported)");
  cmd_bench->add_option("--kernel", bench.kernel, "mvmr | vvor | both");
  cmd_bench->add_option("--out", bench.out, "CSV path (default stdout)");
  cmd_bench->add_flag("--deterministic", bench.deterministic,
                      "bit-reproducible accumulation (default from NPCONV_DETERMINISTIC)");
  cmd_bench->add_option("--workers", bench.workers, "worker threads (0 = auto)");
  cmd_bench->add_flag("--median-only", bench.median_only, "suppress per-repetition rows");

  TripletsOpts trip;
  auto* cmd_trip = app.add_subcommand("triplets", "dump or replay triplet files");
  cmd_trip->add_option("--cloud", trip.cloud, "cloud file to build triplets from");
  cmd_trip->add_option("--in", trip.in_file, "existing triplet file to replay");
  cmd_trip->add_option("--out", trip.out_file, "triplet file to write");
  cmd_trip->add_option("--radius", trip.radius, "native mode search radius");
  cmd_trip->add_option("--t", trip.t, "kernel resolution");
  cmd_trip->add_option("--mode", trip.mode, "native | degraded");
  cmd_trip->add_option("--voxel-size", trip.voxel_size, "degraded mode voxel edge");
  cmd_trip->add_option("--sort", trip.sort, "sort axis for the written file");
  cmd_trip->add_flag("--check", trip.check, "replay through both executors vs the oracle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_ver->parsed()) return run_verify(ver);
    if (cmd_bench->parsed()) return run_bench(bench);
    if (cmd_trip->parsed()) return run_triplets(trip);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const npc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
