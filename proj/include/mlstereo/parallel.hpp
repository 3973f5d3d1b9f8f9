#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mlstereo {

namespace detail {
inline std::atomic<int>& worker_setting() {
  static std::atomic<int> workers{0};
  return workers;
}
}  // namespace detail

/// Worker count used by every parallel loop. 0 (the default) means
/// std::thread::hardware_concurrency().
inline void set_worker_count(int workers) { detail::worker_setting().store(std::max(0, workers)); }

inline int worker_count() {
  const int w = detail::worker_setting().load();
  if (w > 0) return w;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(row) for row in [0, rows), splitting contiguous row bands across
/// workers. Each row is handled by exactly one worker, so results never
/// depend on the worker count as long as body only writes to its own row.
template <class Body>
void parallel_rows(int rows, Body&& body) {
  const int workers = std::min(worker_count(), std::max(rows, 1));
  if (workers <= 1 || rows <= 1) {
    for (int r = 0; r < rows; ++r) body(r);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long>(rows) * w / workers);
    const int end = static_cast<int>(static_cast<long>(rows) * (w + 1) / workers);
    pool.emplace_back([&, begin, end] {
      try {
        for (int r = begin; r < end; ++r) body(r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Sum of per-row partials combined in row order; bit-stable across worker counts.
template <class RowSum>
double ordered_row_sum(int rows, RowSum&& row_sum) {
  std::vector<double> partial(static_cast<std::size_t>(std::max(rows, 0)), 0.0);
  parallel_rows(rows, [&](int r) { partial[static_cast<std::size_t>(r)] = row_sum(r); });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace mlstereo
