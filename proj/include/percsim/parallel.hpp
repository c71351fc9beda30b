#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace percsim {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(k) for k in [0, n) on a fixed worker pool and returns the results
// indexed by k. Replicas draw from their own seed-derived streams, so the
// output is identical for any worker count.
template <class T, class Fn>
std::vector<T> run_replicas(std::size_t n, int workers, Fn&& fn) {
  std::vector<T> results(n);
  const int nw = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1));
  if (nw <= 1 || n < 2) {
    for (std::size_t k = 0; k < n; ++k) results[k] = fn(k);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int t = 0; t < nw; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= n) return;
        try {
          results[k] = fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

}  // namespace percsim
