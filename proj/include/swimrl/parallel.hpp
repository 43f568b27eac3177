#pragma once
// Deterministic fork-join helper: work items are indexed, every item owns its
// random stream, and reductions happen in index order, so results do not
// depend on the worker count or schedule.

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace swimrl {

inline int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp<unsigned>(hw, 1u, 16u));
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t stride = static_cast<std::size_t>(workers);
  pool.reserve(stride);
  for (std::size_t w = 0; w < stride; ++w) {
    pool.emplace_back([&fn, w, n, stride] {
      for (std::size_t i = w; i < n; i += stride) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace swimrl
