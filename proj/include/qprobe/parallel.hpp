#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qprobe {

/// Evaluates fn(i) for i in [0, n) on up to `jobs` threads. Results are stored by
/// index, so output order never depends on scheduling. jobs <= 0 means one
/// worker per hardware thread. The first exception thrown by any task is rethrown.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t n, int jobs, const Fn& fn) {
  std::vector<Result> out(n);
  unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace qprobe
