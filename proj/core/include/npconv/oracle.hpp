// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

#include "npconv/point_cloud.hpp"
#include "npconv/tensors.hpp"
#include "npconv/triplets.hpp"
#include "npconv/vvor.hpp"

namespace npc::oracle {

// Reference implementations: intentionally simple, sequential, double only.
// They share no code with the execution engines so the two routes stay
// independent checks of each other.

struct DenseOracleResult {
  FeatureTensor<double> f_out;
  std::optional<FeatureTensor<double>> grad_in;     // present iff gout was given
  std::optional<WeightGradient<double>> grad_w;     // present iff gout was given
};

/// Direct summation over the triplet list in storage order. When `gout` is
/// provided, also accumulates grad_in.row(j) += W[k]^T gout.row(i) and
/// grad_w[k] += gout.row(i) (x) fin.row(j).
DenseOracleResult dense_conv_oracle(const WeightTensor<double>& weights,
                                    const FeatureTensor<double>& fin,
                                    const TripletList& triplets, std::int64_t n_out,
                                    const FeatureTensor<double>* gout = nullptr);

/// O(N^2) exact closed-ball neighbor search with the same batch semantics and
/// (i, j) output order as radius_search. Accepts radius >= 0 (radius 0 keeps
/// exactly coincident pairs).
NeighborList brute_radius_oracle(const PointCloud& queries, const PointCloud& targets,
                                 double radius);

struct UniqueKStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
};

/// Monte Carlo estimate of the mean number of distinct kernel indices per
/// consecutive group of L entries after sorting n_triplets uniform draws over
/// [0, K). Groups of one trial are averaged, then trial means are averaged;
/// std_error is the standard error over trials. Throws DomainError for
/// invalid sizes (K < 1, n_triplets < 1, L < 1, L > n_triplets, trials < 1).
UniqueKStats unique_k_simulator(std::int64_t K, std::int64_t n_triplets, std::int64_t L,
                                std::int64_t trials, std::uint64_t seed);

/// Exact expectation by enumerating all K^n_triplets draw sequences. Guarded
/// by DomainError when K^n_triplets exceeds 10^7 enumerations.
double unique_k_exhaustive(std::int64_t K, std::int64_t n_triplets, std::int64_t L);

struct GroupUniqueK {
  std::uint64_t sum_unique = 0;  // sum over groups of distinct k per group
  std::uint64_t max_unique = 0;  // max over groups
  std::int64_t n_groups = 0;
};

/// Distinct kernel indices per consecutive group of L triplets of an actual
/// list (verification helper for counter bounds; independent of the engines).
GroupUniqueK group_unique_k(const TripletList& triplets, std::int64_t L);

}  // namespace npc::oracle
