// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Index-parallel map. Results land in caller-owned slots so any reduction
// done afterwards runs in a fixed order regardless of the worker count.

#ifndef LVSCALIB_PARALLEL_HPP
#define LVSCALIB_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lvscalib {

inline constexpr const char* kThreadsEnv = "LVSCALIB_THREADS";

/// Worker count from LVSCALIB_THREADS; unset or invalid means all cores.
inline std::size_t worker_count() {
  const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv(kThreadsEnv);
  if (env == nullptr || *env == '\0') return cores;
  char* end = nullptr;
  const long requested = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || requested <= 0) return cores;
  return static_cast<std::size_t>(requested);
}

/// Calls fn(i) for i in [0, n). The first exception thrown by any worker is
/// rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(n, 1));
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lvscalib

#endif  // LVSCALIB_PARALLEL_HPP
