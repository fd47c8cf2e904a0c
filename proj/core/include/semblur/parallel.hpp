#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace semblur {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Block-parallel loop over [0, n). Each index is processed exactly once by
// exactly one worker; f must only write to per-index slots so results do not
// depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& f) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &f] {
      for (std::size_t i = begin; i < end; ++i) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace semblur
