#include "grasper/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace grasper::parallel {

namespace {

int resolve_workers() {
  if (const char* env = std::getenv("GRASPER_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  int n = omp_get_max_threads();
  return n >= 1 ? n : 1;
}

std::atomic<bool> g_enabled{true};

}  // namespace

int max_workers() {
  static const int workers = resolve_workers();
  return workers;
}

bool enabled() { return g_enabled.load(std::memory_order_relaxed); }

void set_enabled(bool on) { g_enabled.store(on, std::memory_order_relaxed); }

namespace detail {

bool use_threads(int64_t n, int64_t grain) {
  return enabled() && max_workers() > 1 && n >= 2 * grain && n > 1;
}

void omp_run(int64_t n, int64_t grain, void* ctx, void (*body)(void*, int64_t)) {
#pragma omp parallel for schedule(dynamic, grain) num_threads(max_workers())
  for (int64_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace detail

}  // namespace grasper::parallel
