#pragma once

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace microgan {

// Worker cap: MICROGAN_THREADS if set and >= 1, otherwise the machine's
// hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("MICROGAN_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for every i in [0, n). Each index runs on exactly one worker,
// so any reduction that stays inside a single call of fn is independent of
// the worker count. Kernels only parallelize over axes with that property.
template <typename F>
void parallel_for(int64_t n, F&& fn) {
  int workers = worker_count();
  if (workers > n) workers = static_cast<int>(n);
  if (workers <= 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, w, workers, n] {
      for (int64_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace microgan
