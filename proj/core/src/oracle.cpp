// SPDX-License-Identifier: Apache-2.0
#include "npconv/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "npconv/errors.hpp"
#include "npconv/random.hpp"

namespace npc::oracle {

DenseOracleResult dense_conv_oracle(const WeightTensor<double>& weights,
                                    const FeatureTensor<double>& fin,
                                    const TripletList& triplets, std::int64_t n_out,
                                    const FeatureTensor<double>* gout) {
  if (weights.groups() != fin.groups())
    throw ShapeError("dense_conv_oracle: group count mismatch");
  if (weights.c_in() != fin.channels())
    throw ShapeError("dense_conv_oracle: channel count mismatch");
  if (n_out < 0) throw ShapeError("dense_conv_oracle: negative output size");
  if (gout != nullptr) {
    if (gout->n() != n_out) throw ShapeError("dense_conv_oracle: gout row count != n_out");
    if (gout->groups() != weights.groups() || gout->channels() != weights.c_out())
      throw ShapeError("dense_conv_oracle: gout shape mismatch");
  }

  const std::int64_t groups = weights.groups();
  const std::int64_t cig = weights.c_in();
  const std::int64_t cog = weights.c_out();

  DenseOracleResult r{FeatureTensor<double>(n_out, groups, cog), std::nullopt, std::nullopt};
  if (gout != nullptr) {
    r.grad_in.emplace(fin.n(), groups, cig);
    r.grad_w.emplace(weights.kernels(), groups, cog, cig);
  }

  for (std::int64_t t = 0; t < triplets.size(); ++t) {
    const std::int64_t i = triplets.i[static_cast<std::size_t>(t)];
    const std::int64_t j = triplets.j[static_cast<std::size_t>(t)];
    const std::int64_t k = triplets.k[static_cast<std::size_t>(t)];
    if (i >= n_out) throw IndexError("dense_conv_oracle: output index out of range");
    if (j >= fin.n()) throw IndexError("dense_conv_oracle: input index out of range");
    if (k >= weights.kernels()) throw IndexError("dense_conv_oracle: kernel index out of range");

    for (std::int64_t g = 0; g < groups; ++g) {
      const double* w = weights.matrix(k, g);  // C_in x C_out row-major
      const double* f = fin.row(j) + g * cig;
      double* out = r.f_out.row_mut(i) + g * cog;
      for (std::int64_t c = 0; c < cig; ++c)
        for (std::int64_t m = 0; m < cog; ++m) out[m] += w[c * cog + m] * f[c];

      if (gout != nullptr) {
        const double* go = gout->row(i) + g * cog;
        double* gi = r.grad_in->row_mut(j) + g * cig;
        for (std::int64_t c = 0; c < cig; ++c) {
          double s = 0.0;
          for (std::int64_t m = 0; m < cog; ++m) s += w[c * cog + m] * go[m];
          gi[c] += s;
        }
        double* gw = r.grad_w->matrix_mut(k, g);  // C_out x C_in row-major
        for (std::int64_t m = 0; m < cog; ++m)
          for (std::int64_t c = 0; c < cig; ++c) gw[m * cig + c] += go[m] * f[c];
      }
    }
  }
  return r;
}

NeighborList brute_radius_oracle(const PointCloud& queries, const PointCloud& targets,
                                 double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius))
    throw RadiusError("brute_radius_oracle: radius must be finite and >= 0");
  if (queries.n_batches() != targets.n_batches())
    throw ShapeError("brute_radius_oracle: batch count mismatch");

  NeighborList out;
  out.radius = radius;
  const double r2 = radius * radius;
  for (std::int64_t b = 0; b < queries.n_batches(); ++b) {
    const auto [q0, q1] = queries.batch_range(b);
    const auto [t0, t1] = targets.batch_range(b);
    for (std::int64_t i = q0; i < q1; ++i) {
      const Vec3 q = queries.position(i);
      for (std::int64_t j = t0; j < t1; ++j) {
        const Vec3 p = targets.position(j);
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        if (dx * dx + dy * dy + dz * dz <= r2) {
          out.out_index.push_back(i);
          out.in_index.push_back(j);
        }
      }
    }
  }
  return out;
}

namespace {

// Mean distinct values per consecutive group of L over a sorted sequence.
// Counts every group, including a short tail group.
double mean_unique_per_group(const std::vector<std::int64_t>& sorted, std::int64_t L) {
  const std::int64_t n = static_cast<std::int64_t>(sorted.size());
  const std::int64_t n_groups = (n + L - 1) / L;
  std::int64_t total = 0;
  for (std::int64_t g = 0; g < n_groups; ++g) {
    const std::int64_t t0 = g * L;
    const std::int64_t t1 = std::min(n, t0 + L);
    std::int64_t unique = 1;
    for (std::int64_t t = t0 + 1; t < t1; ++t)
      if (sorted[static_cast<std::size_t>(t)] != sorted[static_cast<std::size_t>(t - 1)])
        ++unique;
    total += unique;
  }
  return static_cast<double>(total) / static_cast<double>(n_groups);
}

}  // namespace

UniqueKStats unique_k_simulator(std::int64_t K, std::int64_t n_triplets, std::int64_t L,
                                std::int64_t trials, std::uint64_t seed) {
  if (K < 1) throw DomainError("unique_k_simulator: K must be >= 1");
  if (n_triplets < 1) throw DomainError("unique_k_simulator: n_triplets must be >= 1");
  if (L < 1 || L > n_triplets) throw DomainError("unique_k_simulator: need 1 <= L <= n");
  if (trials < 1) throw DomainError("unique_k_simulator: trials must be >= 1");

  Rng rng(seed);
  std::vector<std::int64_t> draws(static_cast<std::size_t>(n_triplets));
  std::vector<double> means(static_cast<std::size_t>(trials));
  for (std::int64_t tr = 0; tr < trials; ++tr) {
    for (auto& d : draws) d = rng.index(K);
    std::sort(draws.begin(), draws.end());
    means[static_cast<std::size_t>(tr)] = mean_unique_per_group(draws, L);
  }
  double sum = 0.0;
  for (const double m : means) sum += m;
  const double mean = sum / static_cast<double>(trials);
  double var = 0.0;
  for (const double m : means) var += (m - mean) * (m - mean);
  const double se =
      trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1) / static_cast<double>(trials))
                 : 0.0;
  return {mean, se, trials};
}

double unique_k_exhaustive(std::int64_t K, std::int64_t n_triplets, std::int64_t L) {
  if (K < 1) throw DomainError("unique_k_exhaustive: K must be >= 1");
  if (n_triplets < 1) throw DomainError("unique_k_exhaustive: n_triplets must be >= 1");
  if (L < 1 || L > n_triplets) throw DomainError("unique_k_exhaustive: need 1 <= L <= n");
  double combos = 1.0;
  for (std::int64_t t = 0; t < n_triplets; ++t) {
    combos *= static_cast<double>(K);
    if (combos > 1e7) throw DomainError("unique_k_exhaustive: K^n exceeds enumeration budget");
  }

  // Odometer over all K^n draw sequences; each sequence is sorted by counting
  // occurrences, then scanned groupwise like the simulator.
  std::vector<std::int64_t> digits(static_cast<std::size_t>(n_triplets), 0);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(K));
  std::vector<std::int64_t> sorted(static_cast<std::size_t>(n_triplets));
  double total = 0.0;
  std::int64_t n_sequences = 0;
  for (;;) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const std::int64_t d : digits) ++counts[static_cast<std::size_t>(d)];
    std::int64_t pos = 0;
    for (std::int64_t v = 0; v < K; ++v)
      for (std::int64_t c = 0; c < counts[static_cast<std::size_t>(v)]; ++c)
        sorted[static_cast<std::size_t>(pos++)] = v;
    total += mean_unique_per_group(sorted, L);
    ++n_sequences;

    std::int64_t carry = 0;
    while (carry < n_triplets) {
      if (++digits[static_cast<std::size_t>(carry)] < K) break;
      digits[static_cast<std::size_t>(carry)] = 0;
      ++carry;
    }
    if (carry == n_triplets) break;
  }
  return total / static_cast<double>(n_sequences);
}

GroupUniqueK group_unique_k(const TripletList& triplets, std::int64_t L) {
  if (L < 1) throw DomainError("group_unique_k: L must be >= 1");
  GroupUniqueK r;
  const std::int64_t n = triplets.size();
  if (n == 0) return r;
  r.n_groups = (n + L - 1) / L;
  std::vector<std::uint32_t> window;
  window.reserve(static_cast<std::size_t>(std::min(L, n)));
  for (std::int64_t g = 0; g < r.n_groups; ++g) {
    const std::int64_t t0 = g * L;
    const std::int64_t t1 = std::min(n, t0 + L);
    window.assign(triplets.k.begin() + t0, triplets.k.begin() + t1);
    std::sort(window.begin(), window.end());
    std::uint64_t unique = 1;
    for (std::size_t t = 1; t < window.size(); ++t)
      if (window[t] != window[t - 1]) ++unique;
    r.sum_unique += unique;
    r.max_unique = std::max(r.max_unique, unique);
  }
  return r;
}

}  // namespace npc::oracle
