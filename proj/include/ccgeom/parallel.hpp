#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace ccgeom {

// Global cap set by the CLI --threads flag; 0 means hardware concurrency.
int& thread_cap();

// Runs fn(i) for i in [0,n). Work is partitioned by index, so any per-index
// outputs land in caller-owned slots and reductions stay deterministic
// regardless of the number of threads.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  int threads = thread_cap();
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ccgeom
