// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"

namespace npc {

enum class Executor : std::uint8_t { naive = 0, grouped = 1 };

const char* to_string(Executor e);

/// Execution parameters shared by both kernels.
///   L          triplets per group (grouped executor granularity)
///   b_out/b_in tile hints over C_out_g / C_in_g (scalar fallback path;
///              the vector kernels pick their own register blocking)
///   executor   naive per-triplet or grouped sort-by-k
///   deterministic  bit-reproducible accumulation independent of workers
///   workers    0 = auto (NPCONV_WORKERS env or hardware concurrency)
struct ExecConfig {
  std::int64_t L = 128;
  std::int64_t b_out = 32;
  std::int64_t b_in = 32;
  Executor executor = Executor::grouped;
  bool deterministic = false;
  int workers = 0;
};

/// Scalar element counts of shared-tensor traffic. Counters tick at the
/// access-model granularity: a weight matrix counts C_out_g*C_in_g*G once per
/// k-change of a group scan (every triplet for the naive executor), an input
/// row counts C_in_g*G once per j-change, an output row counts C_out_g*G
/// atomic scalars once per i-change flush. For the weight-gradient kernel the
/// roles are: w_reads = upstream gradient rows read, fin_reads = input rows
/// read, fout_atomic_writes = gradient tensor scalars flushed.
struct AccessCounters {
  std::uint64_t w_reads = 0;
  std::uint64_t fin_reads = 0;
  std::uint64_t fout_atomic_writes = 0;

  AccessCounters& operator+=(const AccessCounters& o) {
    w_reads += o.w_reads;
    fin_reads += o.fin_reads;
    fout_atomic_writes += o.fout_atomic_writes;
    return *this;
  }
  friend bool operator==(const AccessCounters&, const AccessCounters&) = default;
};

template <typename T>
struct MvmrResult {
  FeatureTensor<T> out;
  AccessCounters counters;
  std::uint64_t aux_bytes = 0;  // peak auxiliary allocation of the run
};

/// Forward convolution: out.row(i) += W[k] applied to fin.row(j) for every
/// triplet (i, j, k). Output has n_out rows and W.c_out channels per group,
/// initialized to zero. The grouped executor scans fixed consecutive groups
/// of L triplets, reloading model state only on index changes; sort the list
/// (any axis) for locality, unsorted input is legal and merely counts more.
/// Throws IndexError for out-of-range triplets, ShapeError for mismatched
/// G / C between weights and features or n_out < triplets.n_out.
template <typename T>
MvmrResult<T> mvmr(const WeightTensor<T>& weights, const FeatureTensor<T>& fin,
                   const TripletList& triplets, std::int64_t n_out,
                   const ExecConfig& config);

/// Input-gradient pass: grad_in.row(j) += W[k]^T applied to gout.row(i). Runs
/// the same engine with transposed weights and swapped index roles.
template <typename T>
MvmrResult<T> mvmr_transposed(const WeightTensor<T>& weights, const FeatureTensor<T>& gout,
                              const TripletList& triplets, std::int64_t n_in,
                              const ExecConfig& config);

/// Access model, naive executor: every triplet reads one weight matrix, one
/// input row, and writes one output row: |T| * (C_out*C_in + C_in + C_out).
std::uint64_t predict_access_naive(std::uint64_t n_triplets, std::uint64_t c_in,
                                   std::uint64_t c_out);

/// Access model, grouped executor with perfectly coherent groups (one weight
/// load per group): ceil(|T|/L) * (C_out*C_in + L*C_in + L*C_out).
std::uint64_t predict_access_grouped(std::uint64_t n_triplets, std::uint64_t L,
                                     std::uint64_t c_in, std::uint64_t c_out);

/// Expected number of distinct kernel indices per group of L consecutive
/// entries after sorting |T| uniform draws over K values.
struct UniqueExpectation {
  /// 1 + (L-1) * (K*(1-(1-1/K)^|T|) - 1) / (|T|-1); exact only in the
  /// K << |T| regime, an approximation otherwise (slightly high for small
  /// |T|: K=2, |T|=4, L=2 gives 1.2917 vs the exhaustive 1.25).
  double closed_form = 0.0;
  /// 1 + L*K/|T|.
  double approximation = 0.0;
};

/// Throws DomainError unless K >= 1, |T| >= 2, 1 <= L <= |T|.
UniqueExpectation expected_unique_per_group(std::int64_t K, std::int64_t n_triplets,
                                            std::int64_t L);

}  // namespace npc
