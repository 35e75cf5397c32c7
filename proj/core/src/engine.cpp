// SPDX-License-Identifier: Apache-2.0
#include "npconv/engine.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "npconv/errors.hpp"
#include "npconv/parallel.hpp"

namespace npc {

const char* to_string(Executor e) {
  return e == Executor::naive ? "naive" : "grouped";
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NPCONV_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

void validate_config(const ExecConfig& cfg) {
  if (cfg.L < 1) throw ShapeError("ExecConfig: L must be >= 1");
  if (cfg.b_out < 1 || cfg.b_in < 1) throw ShapeError("ExecConfig: tile sizes must be >= 1");
  if (cfg.workers < 0) throw ShapeError("ExecConfig: workers must be >= 0");
}

void validate_indices(const std::vector<std::uint32_t>& idx, std::int64_t bound,
                      const char* what) {
  for (const std::uint32_t v : idx)
    if (static_cast<std::int64_t>(v) >= bound)
      throw IndexError(std::string("triplet ") + what + " index out of range");
}

template <typename T>
inline void atomic_add(T* target, T v) {
  std::atomic_ref<T> ref(*target);
  ref.fetch_add(v, std::memory_order_relaxed);
}

// Triplets computed per kernel-matrix pass inside a sorted k-run.
inline constexpr std::int64_t kRunBlock = 8;

#if defined(__GNUC__)
#define NPCONV_VEC_KERNELS 1
template <typename T>
struct VecOf;
template <>
struct VecOf<float> {
  typedef float type __attribute__((vector_size(32)));
};
template <>
struct VecOf<double> {
  typedef double type __attribute__((vector_size(32)));
};

template <typename V, typename T>
inline V splat(T x) {
  constexpr int lanes = static_cast<int>(sizeof(V) / sizeof(T));
  if constexpr (lanes == 4)
    return V{x, x, x, x};
  else
    return V{x, x, x, x, x, x, x, x};
}
#endif

// Scalar column products dst[m] = sum_c w[c, m] * f[c] for m in [m0, cog).
template <typename T>
inline void product_columns_tail(const T* w, std::int64_t cig, std::int64_t cog,
                                 const T* f, T* dst, std::int64_t m0) {
  for (std::int64_t m = m0; m < cog; ++m) {
    T a{};
    for (std::int64_t c = 0; c < cig; ++c) a += w[c * cog + m] * f[c];
    dst[m] = a;
  }
}

// dst = W_k^T f for one source row. Four vector accumulators per column tile
// keep the FMA chains independent; C_in stays sequential per output element.
template <typename T>
void product_row1(const T* wk, std::int64_t groups, std::int64_t cig, std::int64_t cog,
                  const T* f, T* dst) {
  for (std::int64_t g = 0; g < groups; ++g) {
    const T* w = wk + g * cig * cog;
    const T* fg = f + g * cig;
    T* d = dst + g * cog;
    std::int64_t m = 0;
#if defined(NPCONV_VEC_KERNELS)
    using V = typename VecOf<T>::type;
    constexpr std::int64_t W = static_cast<std::int64_t>(32 / sizeof(T));
    for (; m + 4 * W <= cog; m += 4 * W) {
      V a0{}, a1{}, a2{}, a3{};
      const T* wp = w + m;
      for (std::int64_t c = 0; c < cig; ++c, wp += cog) {
        const V fv = splat<V>(fg[c]);
        V w0, w1, w2, w3;
        std::memcpy(&w0, wp, sizeof(V));
        std::memcpy(&w1, wp + W, sizeof(V));
        std::memcpy(&w2, wp + 2 * W, sizeof(V));
        std::memcpy(&w3, wp + 3 * W, sizeof(V));
        a0 += w0 * fv;
        a1 += w1 * fv;
        a2 += w2 * fv;
        a3 += w3 * fv;
      }
      std::memcpy(d + m, &a0, sizeof(V));
      std::memcpy(d + m + W, &a1, sizeof(V));
      std::memcpy(d + m + 2 * W, &a2, sizeof(V));
      std::memcpy(d + m + 3 * W, &a3, sizeof(V));
    }
    for (; m + W <= cog; m += W) {
      V a{};
      const T* wp = w + m;
      for (std::int64_t c = 0; c < cig; ++c, wp += cog) {
        V wv;
        std::memcpy(&wv, wp, sizeof(V));
        a += wv * splat<V>(fg[c]);
      }
      std::memcpy(d + m, &a, sizeof(V));
    }
#endif
    product_columns_tail(w, cig, cog, fg, d, m);
  }
}

// dst[s] = W_k^T f[s] for kRunBlock rows sharing one kernel matrix. `ft`
// holds the source rows transposed to [c][s] so the inner loop addresses
// them off one base register. Each matrix tile is loaded once per column
// step and reused across all rows, which is what the sorted k-run buys
// over per-triplet execution.
template <typename T>
void product_rows8(const T* wk, std::int64_t groups, std::int64_t cig, std::int64_t cog,
                   const T* ft, T* const* dst) {
  for (std::int64_t g = 0; g < groups; ++g) {
    const T* w = wk + g * cig * cog;
    const T* fg = ft + g * cig * kRunBlock;
    std::int64_t m = 0;
#if defined(NPCONV_VEC_KERNELS)
    using V = typename VecOf<T>::type;
    constexpr std::int64_t W = static_cast<std::int64_t>(32 / sizeof(T));
#if defined(__AVX512VL__)
    // 32 vector registers: a two-vector column tile keeps the FMA ports
    // saturated while the tile loads stay a small fraction of the issue mix.
    for (; m + 2 * W <= cog; m += 2 * W) {
      V a[2 * kRunBlock] = {};
      const T* wp = w + m;
      for (std::int64_t c = 0; c < cig; ++c, wp += cog) {
        V w0, w1;
        std::memcpy(&w0, wp, sizeof(V));
        std::memcpy(&w1, wp + W, sizeof(V));
        const T* fc = fg + c * kRunBlock;
        for (std::int64_t s = 0; s < kRunBlock; ++s) {
          const V fv = splat<V>(fc[s]);
          a[2 * s] += w0 * fv;
          a[2 * s + 1] += w1 * fv;
        }
      }
      for (std::int64_t s = 0; s < kRunBlock; ++s) {
        std::memcpy(dst[s] + g * cog + m, &a[2 * s], sizeof(V));
        std::memcpy(dst[s] + g * cog + m + W, &a[2 * s + 1], sizeof(V));
      }
    }
#endif
    for (; m + W <= cog; m += W) {
      V a[kRunBlock] = {};
      const T* wp = w + m;
      for (std::int64_t c = 0; c < cig; ++c, wp += cog) {
        V wv;
        std::memcpy(&wv, wp, sizeof(V));
        const T* fc = fg + c * kRunBlock;
        for (std::int64_t s = 0; s < kRunBlock; ++s) a[s] += wv * splat<V>(fc[s]);
      }
      for (std::int64_t s = 0; s < kRunBlock; ++s)
        std::memcpy(dst[s] + g * cog + m, &a[s], sizeof(V));
    }
#endif
    for (; m < cog; ++m) {
      for (std::int64_t s = 0; s < kRunBlock; ++s) {
        T acc{};
        for (std::int64_t c = 0; c < cig; ++c) acc += w[c * cog + m] * fg[c * kRunBlock + s];
        dst[s][g * cog + m] = acc;
      }
    }
  }
}

struct SharedCounters {
  std::atomic<std::uint64_t> w{0}, fin{0}, fout{0};

  void merge(const AccessCounters& c) {
    w.fetch_add(c.w_reads, std::memory_order_relaxed);
    fin.fetch_add(c.fin_reads, std::memory_order_relaxed);
    fout.fetch_add(c.fout_atomic_writes, std::memory_order_relaxed);
  }
  AccessCounters total() const { return {w.load(), fin.load(), fout.load()}; }
};

// Scans triplets [t0, t1), reloading model state only on index changes:
// fin row on j-change, kernel matrix on k-change, accumulator flush on
// i-change. Triplets of one k-run are computed kRunBlock at a time; the
// flush order and counter ticks are those of the plain one-by-one scan.
// `temp` holds kRunBlock output rows plus one accumulator row plus the
// kRunBlock-wide source transpose.
template <typename T, typename FlushFn>
void scan_group(const T* w_base, std::int64_t w_stride, const T* fin_base,
                std::int64_t row_in, std::int64_t row_out, std::int64_t groups,
                std::int64_t cig, std::int64_t cog, const std::uint32_t* ti,
                const std::uint32_t* tj, const std::uint32_t* tk, std::int64_t t0,
                std::int64_t t1, T* acc, T* temp, T* ft, AccessCounters& ctr,
                FlushFn&& flush) {
  const std::uint64_t w_elems = static_cast<std::uint64_t>(groups * cig * cog);

  std::uint32_t cur_i = ti[t0], cur_j = tj[t0], cur_k = tk[t0];
  ctr.fin_reads += static_cast<std::uint64_t>(row_in);
  ctr.w_reads += w_elems;
  for (std::int64_t c = 0; c < row_out; ++c) acc[c] = T(0);

  const T* fptr[kRunBlock];
  T* dptr[kRunBlock];
  for (std::int64_t s = 0; s < kRunBlock; ++s) dptr[s] = temp + s * row_out;

  std::int64_t t = t0;
  while (t < t1) {
    if (tk[t] != cur_k) {
      cur_k = tk[t];
      ctr.w_reads += w_elems;
    }
    std::int64_t rend = t + 1;
    while (rend < t1 && tk[rend] == cur_k) ++rend;
    const T* wk = w_base + static_cast<std::int64_t>(cur_k) * w_stride;

    while (t < rend) {
      const std::int64_t nt = std::min(kRunBlock, rend - t);
      for (std::int64_t s = 0; s < nt; ++s) {
        const std::uint32_t j = tj[t + s];
        if (j != cur_j) {
          cur_j = j;
          ctr.fin_reads += static_cast<std::uint64_t>(row_in);
        }
        fptr[s] = fin_base + static_cast<std::int64_t>(j) * row_in;
      }
      if (nt == kRunBlock) {
        for (std::int64_t c = 0; c < row_in; ++c)
          for (std::int64_t s = 0; s < kRunBlock; ++s) ft[c * kRunBlock + s] = fptr[s][c];
        product_rows8(wk, groups, cig, cog, ft, dptr);
      } else {
        for (std::int64_t s = 0; s < nt; ++s)
          product_row1(wk, groups, cig, cog, fptr[s], dptr[s]);
      }
      for (std::int64_t s = 0; s < nt; ++s) {
        if (ti[t + s] != cur_i) {
          flush(cur_i, acc);
          ctr.fout_atomic_writes += static_cast<std::uint64_t>(row_out);
          cur_i = ti[t + s];
          for (std::int64_t c = 0; c < row_out; ++c) acc[c] = T(0);
        }
        const T* src = dptr[s];
        for (std::int64_t c = 0; c < row_out; ++c) acc[c] += src[c];
      }
      t += nt;
    }
  }
  flush(cur_i, acc);
  ctr.fout_atomic_writes += static_cast<std::uint64_t>(row_out);
}

// Engine core over raw index arrays. `out_idx`/`in_idx` are the accumulation
// target / source roles, so the transposed pass can swap them.
template <typename T>
MvmrResult<T> run_engine(const WeightTensor<T>& weights, const FeatureTensor<T>& fin,
                         const std::vector<std::uint32_t>& out_idx,
                         const std::vector<std::uint32_t>& in_idx,
                         const std::vector<std::uint32_t>& k_idx, std::int64_t n_out,
                         const ExecConfig& cfg) {
  validate_config(cfg);
  if (weights.groups() != fin.groups())
    throw ShapeError("mvmr: weight and feature group counts differ");
  if (weights.c_in() != fin.channels())
    throw ShapeError("mvmr: weight C_in_g does not match feature channels");
  if (n_out < 0) throw ShapeError("mvmr: negative output size");
  validate_indices(out_idx, n_out, "output");
  validate_indices(in_idx, fin.n(), "input");
  validate_indices(k_idx, weights.kernels(), "kernel");

  const std::int64_t groups = weights.groups();
  const std::int64_t cig = weights.c_in();
  const std::int64_t cog = weights.c_out();
  const std::int64_t row_in = groups * cig;
  const std::int64_t row_out = groups * cog;
  const std::int64_t w_stride = groups * cig * cog;
  const std::int64_t n = static_cast<std::int64_t>(out_idx.size());
  const int workers = resolve_workers(cfg.workers);

  MvmrResult<T> result{FeatureTensor<T>(n_out, groups, cog), {}, 0};
  if (n == 0) return result;

  const T* w_base = weights.values().data();
  const T* fin_base = fin.values().data();
  T* out_base = result.out.values_mut().data();
  const std::uint32_t* ti = out_idx.data();
  const std::uint32_t* tj = in_idx.data();
  const std::uint32_t* tk = k_idx.data();
  SharedCounters shared;

  if (cfg.executor == Executor::naive) {
    const std::uint64_t w_elems = static_cast<std::uint64_t>(w_stride);
    if (cfg.deterministic) {
      // Serial per-triplet scan: addition order is storage order, independent
      // of the worker count by construction.
      std::vector<T> acc(static_cast<std::size_t>(row_out));
      AccessCounters ctr;
      for (std::int64_t t = 0; t < n; ++t) {
        product_row1(w_base + tk[t] * w_stride, groups, cig, cog,
                     fin_base + tj[t] * row_in, acc.data());
        T* dst = out_base + static_cast<std::int64_t>(ti[t]) * row_out;
        for (std::int64_t c = 0; c < row_out; ++c) dst[c] += acc[c];
        ctr.w_reads += w_elems;
        ctr.fin_reads += static_cast<std::uint64_t>(row_in);
        ctr.fout_atomic_writes += static_cast<std::uint64_t>(row_out);
      }
      shared.merge(ctr);
      result.aux_bytes = acc.size() * sizeof(T);
    } else {
      const std::int64_t chunk = 4096;
      const std::int64_t n_chunks = (n + chunk - 1) / chunk;
      const int active = static_cast<int>(std::min<std::int64_t>(workers, n_chunks));
      std::vector<std::vector<T>> acc_per_worker(
          static_cast<std::size_t>(active), std::vector<T>(static_cast<std::size_t>(row_out)));
      parallel_for(n_chunks, workers, [&](std::int64_t c_idx, int worker) {
        T* acc = acc_per_worker[static_cast<std::size_t>(worker)].data();
        AccessCounters ctr;
        const std::int64_t t1 = std::min(n, (c_idx + 1) * chunk);
        for (std::int64_t t = c_idx * chunk; t < t1; ++t) {
          product_row1(w_base + tk[t] * w_stride, groups, cig, cog,
                       fin_base + tj[t] * row_in, acc);
          T* dst = out_base + static_cast<std::int64_t>(ti[t]) * row_out;
          for (std::int64_t c = 0; c < row_out; ++c) atomic_add(dst + c, acc[c]);
          ctr.w_reads += w_elems;
          ctr.fin_reads += static_cast<std::uint64_t>(row_in);
          ctr.fout_atomic_writes += static_cast<std::uint64_t>(row_out);
        }
        shared.merge(ctr);
      });
      result.aux_bytes = static_cast<std::uint64_t>(active) *
                         static_cast<std::uint64_t>(row_out) * sizeof(T);
    }
    result.counters = shared.total();
    return result;
  }

  // Grouped executor: fixed consecutive groups of L triplets.
  const std::int64_t L = cfg.L;
  const std::int64_t n_groups = (n + L - 1) / L;
  const std::int64_t scratch_elems = (kRunBlock + 1) * row_out + kRunBlock * row_in;

  if (!cfg.deterministic) {
    const int active = static_cast<int>(std::min<std::int64_t>(workers, n_groups));
    std::vector<std::vector<T>> scratch(
        static_cast<std::size_t>(active),
        std::vector<T>(static_cast<std::size_t>(scratch_elems)));
    parallel_for(n_groups, workers, [&](std::int64_t g_idx, int worker) {
      T* acc = scratch[static_cast<std::size_t>(worker)].data();
      T* temp = acc + row_out;
      T* ft = temp + kRunBlock * row_out;
      AccessCounters ctr;
      const std::int64_t t0 = g_idx * L;
      const std::int64_t t1 = std::min(n, t0 + L);
      scan_group(w_base, w_stride, fin_base, row_in, row_out, groups, cig, cog, ti, tj, tk,
                 t0, t1, acc, temp, ft, ctr, [&](std::uint32_t row, const T* v) {
                   T* dst = out_base + static_cast<std::int64_t>(row) * row_out;
                   for (std::int64_t c = 0; c < row_out; ++c) atomic_add(dst + c, v[c]);
                 });
      shared.merge(ctr);
    });
    result.aux_bytes = static_cast<std::uint64_t>(active) *
                       static_cast<std::uint64_t>(scratch_elems) * sizeof(T);
    result.counters = shared.total();
    return result;
  }

  // Deterministic: group flush lists are computed in parallel inside a
  // window, then applied in ascending group order by one thread. Addition
  // order per output element is fixed by (group, scan position) alone, so
  // results are byte-identical for any worker count.
  struct FlushBuf {
    std::vector<std::uint32_t> rows;
    std::vector<T> values;
  };
  const std::int64_t window = std::max<std::int64_t>(1, workers) * 4;
  const std::int64_t slots = std::min(window, n_groups);
  std::vector<FlushBuf> bufs(static_cast<std::size_t>(slots));
  std::vector<std::vector<T>> scratch(
      static_cast<std::size_t>(std::min<std::int64_t>(workers, slots)),
      std::vector<T>(static_cast<std::size_t>(scratch_elems)));

  for (std::int64_t w0 = 0; w0 < n_groups; w0 += window) {
    const std::int64_t w1 = std::min(n_groups, w0 + window);
    parallel_for(w1 - w0, workers, [&](std::int64_t slot, int worker) {
      FlushBuf& buf = bufs[static_cast<std::size_t>(slot)];
      buf.rows.clear();
      buf.values.clear();
      T* acc = scratch[static_cast<std::size_t>(worker)].data();
      T* temp = acc + row_out;
      T* ft = temp + kRunBlock * row_out;
      AccessCounters ctr;
      const std::int64_t t0 = (w0 + slot) * L;
      const std::int64_t t1 = std::min(n, t0 + L);
      scan_group(w_base, w_stride, fin_base, row_in, row_out, groups, cig, cog, ti, tj, tk,
                 t0, t1, acc, temp, ft, ctr, [&](std::uint32_t row, const T* v) {
                   buf.rows.push_back(row);
                   buf.values.insert(buf.values.end(), v, v + row_out);
                 });
      shared.merge(ctr);
    });
    for (std::int64_t slot = 0; slot < w1 - w0; ++slot) {
      const FlushBuf& buf = bufs[static_cast<std::size_t>(slot)];
      for (std::size_t f = 0; f < buf.rows.size(); ++f) {
        T* dst = out_base + static_cast<std::int64_t>(buf.rows[f]) * row_out;
        const T* v = buf.values.data() + f * static_cast<std::size_t>(row_out);
        for (std::int64_t c = 0; c < row_out; ++c) dst[c] += v[c];
      }
    }
  }
  std::uint64_t aux = 0;
  for (const auto& s : scratch) aux += s.capacity() * sizeof(T);
  for (const FlushBuf& b : bufs)
    aux += b.rows.capacity() * sizeof(std::uint32_t) + b.values.capacity() * sizeof(T);
  result.aux_bytes = aux;
  result.counters = shared.total();
  return result;
}

}  // namespace

template <typename T>
MvmrResult<T> mvmr(const WeightTensor<T>& weights, const FeatureTensor<T>& fin,
                   const TripletList& triplets, std::int64_t n_out,
                   const ExecConfig& config) {
  if (triplets.n_kernels != weights.kernels())
    throw ShapeError("mvmr: triplet n_kernels does not match weight kernel count");
  if (triplets.n_in > fin.n())
    throw ShapeError("mvmr: triplet n_in exceeds feature rows");
  if (triplets.n_out > n_out)
    throw ShapeError("mvmr: triplet n_out exceeds requested output size");
  return run_engine(weights, fin, triplets.i, triplets.j, triplets.k, n_out, config);
}

template <typename T>
MvmrResult<T> mvmr_transposed(const WeightTensor<T>& weights, const FeatureTensor<T>& gout,
                              const TripletList& triplets, std::int64_t n_in,
                              const ExecConfig& config) {
  if (triplets.n_kernels != weights.kernels())
    throw ShapeError("mvmr_transposed: triplet n_kernels does not match weight kernel count");
  if (weights.c_out() != gout.channels())
    throw ShapeError("mvmr_transposed: weight C_out_g does not match gradient channels");
  if (triplets.n_out > gout.n())
    throw ShapeError("mvmr_transposed: triplet n_out exceeds gradient rows");
  if (triplets.n_in > n_in)
    throw ShapeError("mvmr_transposed: triplet n_in exceeds requested output size");
  const WeightTensor<T> wt = weights.transposed();
  MvmrResult<T> result = run_engine(wt, gout, triplets.j, triplets.i, triplets.k, n_in, config);
  result.aux_bytes += wt.values().size() * sizeof(T);
  return result;
}

template MvmrResult<float> mvmr<float>(const WeightTensor<float>&, const FeatureTensor<float>&,
                                       const TripletList&, std::int64_t, const ExecConfig&);
template MvmrResult<double> mvmr<double>(const WeightTensor<double>&,
                                         const FeatureTensor<double>&, const TripletList&,
                                         std::int64_t, const ExecConfig&);
template MvmrResult<float> mvmr_transposed<float>(const WeightTensor<float>&,
                                                  const FeatureTensor<float>&,
                                                  const TripletList&, std::int64_t,
                                                  const ExecConfig&);
template MvmrResult<double> mvmr_transposed<double>(const WeightTensor<double>&,
                                                    const FeatureTensor<double>&,
                                                    const TripletList&, std::int64_t,
                                                    const ExecConfig&);

std::uint64_t predict_access_naive(std::uint64_t n_triplets, std::uint64_t c_in,
                                   std::uint64_t c_out) {
  return n_triplets * (c_out * c_in + c_in + c_out);
}

std::uint64_t predict_access_grouped(std::uint64_t n_triplets, std::uint64_t L,
                                     std::uint64_t c_in, std::uint64_t c_out) {
  if (L < 1) throw DomainError("predict_access_grouped: L must be >= 1");
  const std::uint64_t n_groups = (n_triplets + L - 1) / L;
  return n_groups * (c_out * c_in + L * c_in + L * c_out);
}

UniqueExpectation expected_unique_per_group(std::int64_t K, std::int64_t n_triplets,
                                            std::int64_t L) {
  if (K < 1) throw DomainError("expected_unique_per_group: K must be >= 1");
  if (n_triplets < 2) throw DomainError("expected_unique_per_group: |T| must be >= 2");
  if (L < 1 || L > n_triplets)
    throw DomainError("expected_unique_per_group: need 1 <= L <= |T|");
  const double k = static_cast<double>(K);
  const double t = static_cast<double>(n_triplets);
  const double l = static_cast<double>(L);
  UniqueExpectation e;
  e.closed_form = 1.0 + (l - 1.0) * (k * (1.0 - std::pow(1.0 - 1.0 / k, t)) - 1.0) / (t - 1.0);
  e.approximation = 1.0 + l * k / t;
  return e;
}

}  // namespace npc
