#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace geoflow {

inline unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs f(i) for i in [0, n) on all cores. Results must be written per index, which keeps
// the outcome independent of scheduling. The exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_at(workers, std::numeric_limits<std::size_t>::max());
  std::vector<std::thread> pool;
  const std::size_t chunk = std::max<std::size_t>(1, n / (workers * 16));
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        const std::size_t start = next.fetch_add(chunk);
        if (start >= n) return;
        for (std::size_t i = start; i < std::min(n, start + chunk); ++i) {
          try {
            f(i);
          } catch (...) {
            if (i < error_at[w]) {
              error_at[w] = i;
              errors[w] = std::current_exception();
            }
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::exception_ptr first;
  for (std::size_t w = 0; w < workers; ++w)
    if (errors[w] && error_at[w] < best) {
      best = error_at[w];
      first = errors[w];
    }
  if (first) std::rethrow_exception(first);
}

}  // namespace geoflow
