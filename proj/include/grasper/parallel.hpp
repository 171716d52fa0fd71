#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <utility>

namespace grasper::parallel {

// Worker count resolution: GRASPER_WORKERS env var wins, otherwise the OpenMP
// default. Always >= 1.
int max_workers();

// When disabled, every parallel_for below runs the plain serial loop. Used as
// the reference implementation in tests and benchmarks.
bool enabled();
void set_enabled(bool on);

namespace detail {
bool use_threads(int64_t n, int64_t grain);
void omp_run(int64_t n, int64_t grain, void* ctx, void (*body)(void*, int64_t));
}  // namespace detail

// Deterministic parallel map: body(i) may only write state owned by index i,
// so results are identical for any worker count (including the serial path).
// The first exception thrown by any worker is rethrown on the caller thread.
template <typename F>
void parallel_for(int64_t n, F&& body, int64_t grain = 1) {
  if (!detail::use_threads(n, grain)) {
    for (int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;
  auto wrapped = [&](int64_t i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  using Wrapped = decltype(wrapped);
  detail::omp_run(n, grain, &wrapped, [](void* ctx, int64_t i) {
    (*static_cast<Wrapped*>(ctx))(i);
  });
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace grasper::parallel
