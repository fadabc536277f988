#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace quanta {

// Runs fn(0..n_jobs-1) across up to `threads` workers. Jobs must be
// independent; each job writes only its own output slot. The first exception
// is rethrown on the calling thread after all workers join.
inline void parallel_jobs(std::size_t n_jobs, int threads,
                          const std::function<void(std::size_t)>& fn) {
  if (n_jobs == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(n_jobs, threads < 1 ? 1 : static_cast<std::size_t>(threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace quanta
