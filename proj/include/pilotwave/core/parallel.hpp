#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>

#include <omp.h>

namespace pilotwave {

/// Environment variable that fixes the number of worker threads.
inline constexpr const char* kThreadsEnv = "PILOTWAVE_THREADS";

/// Applies PILOTWAVE_THREADS if set; returns the thread count in effect.
inline int configure_threads() {
  if (const char* s = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const long n = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

/// Runs f(i) for i in [0, n) across threads; rethrows the first exception.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  std::exception_ptr err;
  std::mutex mu;
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace pilotwave
