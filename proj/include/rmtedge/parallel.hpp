#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace rmtedge {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(0), ..., fn(count - 1) on up to `threads` workers and returns the
/// results in trial order. Workers pull trial indices from a shared counter,
/// so the assignment of trials to threads varies, but each result depends on
/// its index only. The first exception thrown by any trial is rethrown after
/// all workers have stopped.
template <class Fn>
auto run_trials(std::size_t count, unsigned threads, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> results(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  const unsigned n = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace rmtedge
