#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "hdrexp/image.hpp"

namespace hdrexp {

/// Number of worker threads for a requested count; 0 means all available cores.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(k) for k in [0, n) on up to `threads` workers. Iterations must write
/// disjoint outputs; the first exception thrown by any iteration is rethrown.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  const int workers = static_cast<int>(std::min<Index>(resolve_threads(threads), std::max<Index>(n, 1)));
  if (workers <= 1) {
    for (Index k = 0; k < n; ++k) fn(k);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (Index k = w; k < n; k += workers) fn(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hdrexp
