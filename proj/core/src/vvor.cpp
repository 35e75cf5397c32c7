// SPDX-License-Identifier: Apache-2.0
#include "npconv/vvor.hpp"

#include <atomic>

#include "npconv/errors.hpp"
#include "npconv/parallel.hpp"

namespace npc {

namespace {

template <typename T>
inline void atomic_add(T* target, T v) {
  std::atomic_ref<T> ref(*target);
  ref.fetch_add(v, std::memory_order_relaxed);
}

// tile += gout_row outer fin_row, per group, tiled over (b_out, b_in).
// Tile layout matches WeightGradient storage: (g, m, c) row-major.
template <typename T>
inline void accumulate_outer(const T* gout_row, const T* fin_row, T* tile,
                             std::int64_t groups, std::int64_t cig, std::int64_t cog,
                             std::int64_t b_out, std::int64_t b_in) {
  for (std::int64_t g = 0; g < groups; ++g) {
    const T* go = gout_row + g * cog;
    const T* fi = fin_row + g * cig;
    T* a = tile + g * cog * cig;
    for (std::int64_t m0 = 0; m0 < cog; m0 += b_out) {
      const std::int64_t m1 = std::min(cog, m0 + b_out);
      for (std::int64_t c0 = 0; c0 < cig; c0 += b_in) {
        const std::int64_t c1 = std::min(cig, c0 + b_in);
        for (std::int64_t m = m0; m < m1; ++m) {
          const T gm = go[m];
          T* ar = a + m * cig;
          for (std::int64_t c = c0; c < c1; ++c) ar[c] += gm * fi[c];
        }
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

// Scans triplets [t0, t1): upstream row reloads on i-change, input row
// reloads on j-change, tile flush on k-change and at the end.
template <typename T, typename FlushFn>
void scan_group(const T* gout_base, const T* fin_base, std::int64_t row_out,
                std::int64_t row_in, std::int64_t groups, std::int64_t cig, std::int64_t cog,
                std::int64_t b_out, std::int64_t b_in, const std::uint32_t* ti,
                const std::uint32_t* tj, const std::uint32_t* tk, std::int64_t t0,
                std::int64_t t1, T* gout_row, T* fin_row, T* tile, AccessCounters& ctr,
                FlushFn&& flush) {
  const std::int64_t tile_elems = groups * cog * cig;

  std::uint32_t cur_i = ti[t0], cur_j = tj[t0], cur_k = tk[t0];
  const T* go = gout_base + static_cast<std::int64_t>(cur_i) * row_out;
  for (std::int64_t c = 0; c < row_out; ++c) gout_row[c] = go[c];
  ctr.w_reads += static_cast<std::uint64_t>(row_out);
  const T* fi = fin_base + static_cast<std::int64_t>(cur_j) * row_in;
  for (std::int64_t c = 0; c < row_in; ++c) fin_row[c] = fi[c];
  ctr.fin_reads += static_cast<std::uint64_t>(row_in);
  for (std::int64_t c = 0; c < tile_elems; ++c) tile[c] = T(0);
  accumulate_outer(gout_row, fin_row, tile, groups, cig, cog, b_out, b_in);

  for (std::int64_t t = t0 + 1; t < t1; ++t) {
    if (ti[t] != cur_i) {
      cur_i = ti[t];
      const T* row = gout_base + static_cast<std::int64_t>(cur_i) * row_out;
      for (std::int64_t c = 0; c < row_out; ++c) gout_row[c] = row[c];
      ctr.w_reads += static_cast<std::uint64_t>(row_out);
    }
    if (tj[t] != cur_j) {
      cur_j = tj[t];
      const T* row = fin_base + static_cast<std::int64_t>(cur_j) * row_in;
      for (std::int64_t c = 0; c < row_in; ++c) fin_row[c] = row[c];
      ctr.fin_reads += static_cast<std::uint64_t>(row_in);
    }
    if (tk[t] != cur_k) {
      flush(cur_k, tile);
      ctr.fout_atomic_writes += static_cast<std::uint64_t>(tile_elems);
      cur_k = tk[t];
      for (std::int64_t c = 0; c < tile_elems; ++c) tile[c] = T(0);
    }
    accumulate_outer(gout_row, fin_row, tile, groups, cig, cog, b_out, b_in);
  }
  flush(cur_k, tile);
  ctr.fout_atomic_writes += static_cast<std::uint64_t>(tile_elems);
}

}  // namespace

template <typename T>
VvorResult<T> vvor(const FeatureTensor<T>& gout, const FeatureTensor<T>& fin,
                   const TripletList& triplets, std::int64_t n_kernels,
                   const ExecConfig& config) {
  if (config.L < 1) throw ShapeError("vvor: L must be >= 1");
  if (config.b_out < 1 || config.b_in < 1) throw ShapeError("vvor: tile sizes must be >= 1");
  if (gout.groups() != fin.groups())
    throw ShapeError("vvor: gradient and feature group counts differ");
  if (n_kernels < 1) throw ShapeError("vvor: n_kernels must be >= 1");
  if (triplets.n_kernels > n_kernels)
    throw ShapeError("vvor: triplet n_kernels exceeds requested kernel count");
  if (triplets.n_out > gout.n()) throw ShapeError("vvor: triplet n_out exceeds gradient rows");
  if (triplets.n_in > fin.n()) throw ShapeError("vvor: triplet n_in exceeds feature rows");
  for (const std::uint32_t v : triplets.i)
    if (static_cast<std::int64_t>(v) >= gout.n())
      throw IndexError("vvor: output index out of range");
  for (const std::uint32_t v : triplets.j)
    if (static_cast<std::int64_t>(v) >= fin.n())
      throw IndexError("vvor: input index out of range");
  for (const std::uint32_t v : triplets.k)
    if (static_cast<std::int64_t>(v) >= n_kernels)
      throw IndexError("vvor: kernel index out of range");

  const std::int64_t groups = gout.groups();
  const std::int64_t cog = gout.channels();
  const std::int64_t cig = fin.channels();
  const std::int64_t row_out = groups * cog;
  const std::int64_t row_in = groups * cig;
  const std::int64_t tile_elems = groups * cog * cig;
  const std::int64_t n = triplets.size();
  const int workers = resolve_workers(config.workers);

  VvorResult<T> result{WeightGradient<T>(n_kernels, groups, cog, cig), {}, 0};
  if (n == 0) return result;

  const T* gout_base = gout.values().data();
  const T* fin_base = fin.values().data();
  T* grad_base = result.grad.values_mut().data();
  const std::uint32_t* ti = triplets.i.data();
  const std::uint32_t* tj = triplets.j.data();
  const std::uint32_t* tk = triplets.k.data();
  SharedCounters shared;
  const std::int64_t scratch_elems = row_out + row_in + tile_elems;

  if (config.executor == Executor::naive) {
    // Reload both rows and flush the tile for every triplet.
    if (config.deterministic) {
      std::vector<T> tile(static_cast<std::size_t>(tile_elems));
      AccessCounters ctr;
      for (std::int64_t t = 0; t < n; ++t) {
        const T* go = gout_base + static_cast<std::int64_t>(ti[t]) * row_out;
        const T* fi = fin_base + static_cast<std::int64_t>(tj[t]) * row_in;
        for (std::int64_t c = 0; c < tile_elems; ++c) tile[c] = T(0);
        accumulate_outer(go, fi, tile.data(), groups, cig, cog, config.b_out, config.b_in);
        T* dst = grad_base + static_cast<std::int64_t>(tk[t]) * tile_elems;
        for (std::int64_t c = 0; c < tile_elems; ++c) dst[c] += tile[c];
        ctr.w_reads += static_cast<std::uint64_t>(row_out);
        ctr.fin_reads += static_cast<std::uint64_t>(row_in);
        ctr.fout_atomic_writes += static_cast<std::uint64_t>(tile_elems);
      }
      shared.merge(ctr);
      result.aux_bytes = tile.size() * sizeof(T);
    } else {
      const std::int64_t chunk = 1024;
      const std::int64_t n_chunks = (n + chunk - 1) / chunk;
      const int active = static_cast<int>(std::min<std::int64_t>(workers, n_chunks));
      std::vector<std::vector<T>> tiles(static_cast<std::size_t>(active),
                                        std::vector<T>(static_cast<std::size_t>(tile_elems)));
      parallel_for(n_chunks, workers, [&](std::int64_t c_idx, int worker) {
        T* tile = tiles[static_cast<std::size_t>(worker)].data();
        AccessCounters ctr;
        const std::int64_t t1 = std::min(n, (c_idx + 1) * chunk);
        for (std::int64_t t = c_idx * chunk; t < t1; ++t) {
          const T* go = gout_base + static_cast<std::int64_t>(ti[t]) * row_out;
          const T* fi = fin_base + static_cast<std::int64_t>(tj[t]) * row_in;
          for (std::int64_t c = 0; c < tile_elems; ++c) tile[c] = T(0);
          accumulate_outer(go, fi, tile, groups, cig, cog, config.b_out, config.b_in);
          T* dst = grad_base + static_cast<std::int64_t>(tk[t]) * tile_elems;
          for (std::int64_t c = 0; c < tile_elems; ++c) atomic_add(dst + c, tile[c]);
          ctr.w_reads += static_cast<std::uint64_t>(row_out);
          ctr.fin_reads += static_cast<std::uint64_t>(row_in);
          ctr.fout_atomic_writes += static_cast<std::uint64_t>(tile_elems);
        }
        shared.merge(ctr);
      });
      result.aux_bytes = static_cast<std::uint64_t>(active) *
                         static_cast<std::uint64_t>(tile_elems) * sizeof(T);
    }
    result.counters = shared.total();
    return result;
  }

  const std::int64_t L = config.L;
  const std::int64_t n_groups = (n + L - 1) / L;

  if (!config.deterministic) {
    const int active = static_cast<int>(std::min<std::int64_t>(workers, n_groups));
    std::vector<std::vector<T>> scratch(
        static_cast<std::size_t>(active),
        std::vector<T>(static_cast<std::size_t>(scratch_elems)));
    parallel_for(n_groups, workers, [&](std::int64_t g_idx, int worker) {
      T* gout_row = scratch[static_cast<std::size_t>(worker)].data();
      T* fin_row = gout_row + row_out;
      T* tile = fin_row + row_in;
      AccessCounters ctr;
      const std::int64_t t0 = g_idx * L;
      const std::int64_t t1 = std::min(n, t0 + L);
      scan_group(gout_base, fin_base, row_out, row_in, groups, cig, cog, config.b_out,
                 config.b_in, ti, tj, tk, t0, t1, gout_row, fin_row, tile, ctr,
                 [&](std::uint32_t kk, const T* v) {
                   T* dst = grad_base + static_cast<std::int64_t>(kk) * tile_elems;
                   for (std::int64_t c = 0; c < tile_elems; ++c) atomic_add(dst + c, v[c]);
                 });
      shared.merge(ctr);
    });
    result.aux_bytes = static_cast<std::uint64_t>(active) *
                       static_cast<std::uint64_t>(scratch_elems) * sizeof(T);
    result.counters = shared.total();
    return result;
  }

  // Deterministic: same windowed two-phase scheme as the forward engine.
  struct FlushBuf {
    std::vector<std::uint32_t> ks;
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
      buf.ks.clear();
      buf.values.clear();
      T* gout_row = scratch[static_cast<std::size_t>(worker)].data();
      T* fin_row = gout_row + row_out;
      T* tile = fin_row + row_in;
      AccessCounters ctr;
      const std::int64_t t0 = (w0 + slot) * L;
      const std::int64_t t1 = std::min(n, t0 + L);
      scan_group(gout_base, fin_base, row_out, row_in, groups, cig, cog, config.b_out,
                 config.b_in, ti, tj, tk, t0, t1, gout_row, fin_row, tile, ctr,
                 [&](std::uint32_t kk, const T* v) {
                   buf.ks.push_back(kk);
                   buf.values.insert(buf.values.end(), v, v + tile_elems);
                 });
      shared.merge(ctr);
    });
    for (std::int64_t slot = 0; slot < w1 - w0; ++slot) {
      const FlushBuf& buf = bufs[static_cast<std::size_t>(slot)];
      for (std::size_t f = 0; f < buf.ks.size(); ++f) {
        T* dst = grad_base + static_cast<std::int64_t>(buf.ks[f]) * tile_elems;
        const T* v = buf.values.data() + f * static_cast<std::size_t>(tile_elems);
        for (std::int64_t c = 0; c < tile_elems; ++c) dst[c] += v[c];
      }
    }
  }
  std::uint64_t aux = 0;
  for (const auto& s : scratch) aux += s.capacity() * sizeof(T);
  for (const FlushBuf& b : bufs)
    aux += b.ks.capacity() * sizeof(std::uint32_t) + b.values.capacity() * sizeof(T);
  result.aux_bytes = aux;
  result.counters = shared.total();
  return result;
}

template VvorResult<float> vvor<float>(const FeatureTensor<float>&, const FeatureTensor<float>&,
                                       const TripletList&, std::int64_t, const ExecConfig&);
template VvorResult<double> vvor<double>(const FeatureTensor<double>&,
                                         const FeatureTensor<double>&, const TripletList&,
                                         std::int64_t, const ExecConfig&);

}  // namespace npc
