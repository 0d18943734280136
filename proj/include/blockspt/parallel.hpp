#pragma once

// Minimal fork-join parallelism for embarrassingly parallel sweeps. Work is
// split into fixed contiguous chunks assigned by chunk index, so any
// per-chunk results can be reduced in deterministic order regardless of the
// number of worker threads.

#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace blockspt {

/// Worker count: BLOCKSPT_THREADS wins over `requested` (0 = auto), which
/// wins over hardware concurrency. Always at least 1.
inline int thread_count(int requested = 0) {
  if (const char* env = std::getenv("BLOCKSPT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, count) across `threads` workers. Static block
/// scheduling: worker t owns indices with i / block == t-th stripe, so the
/// assignment (and thus any per-index output slot) never depends on timing.
template <class Fn>
void parallel_for(std::int64_t count, Fn&& fn, int threads = 0) {
  const int workers =
      static_cast<int>(std::min<std::int64_t>(thread_count(threads), count));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      for (std::int64_t i = t; i < count; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace blockspt
