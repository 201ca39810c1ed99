// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace gmmv {

/// Worker cap shared by all parallel loops. 0 means "use hardware concurrency".
/// The GMMV_THREADS environment variable provides the initial value.
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap = [] {
    if (const char* env = std::getenv("GMMV_THREADS")) {
      int v = std::atoi(env);
      if (v > 0) return v;
    }
    return 0;
  }();
  return cap;
}

inline void set_max_threads(int n) { thread_cap().store(n); }

inline int max_threads() {
  int cap = thread_cap().load();
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  return cap > 0 ? std::min(cap, hw) : hw;
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks so that
/// each index is processed by exactly one thread; results must be written to
/// disjoint slots to stay deterministic.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  int nt = std::min<std::int64_t>(max_threads(), n);
  if (nt <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::int64_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    std::int64_t lo = t * chunk;
    std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace gmmv
