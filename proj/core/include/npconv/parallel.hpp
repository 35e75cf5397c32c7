// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace npc {

/// Resolves an effective worker count: `requested` if positive, otherwise the
/// NPCONV_WORKERS environment variable if set, otherwise hardware concurrency.
int resolve_workers(int requested);

/// Runs fn(task, worker) for every task in [0, n_tasks) on `workers` threads.
/// Tasks are distributed in fixed contiguous blocks; the task -> work mapping
/// never depends on the worker count, only the schedule does.
inline void parallel_for(std::int64_t n_tasks, int workers,
                         const std::function<void(std::int64_t, int)>& fn) {
  if (n_tasks <= 0) return;
  if (workers > n_tasks) workers = static_cast<int>(n_tasks);
  if (workers <= 1) {
    for (std::int64_t t = 0; t < n_tasks; ++t) fn(t, 0);
    return;
  }
  const std::int64_t block = (n_tasks + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * block;
    const std::int64_t hi = std::min(n_tasks, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, w, &fn] {
      for (std::int64_t t = lo; t < hi; ++t) fn(t, w);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace npc
