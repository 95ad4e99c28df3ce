#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace parasim {

/// Runs fn(i) for every replicate index i in [0, n) on `workers` threads.
/// Replicates are split into contiguous blocks; callers write results into
/// per-index slots and reduce afterwards in index order, so the outcome never
/// depends on the worker count.
template <class Fn>
void for_each_replicate(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t used = std::min<std::size_t>(workers, n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    const std::size_t begin = n * w / used;
    const std::size_t end = n * (w + 1) / used;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace parasim
