#include "refinekit/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

namespace refinekit {

namespace {
std::atomic<bool> g_deterministic{true};
}

ExecutionPolicy execution_policy() { return ExecutionPolicy{g_deterministic.load()}; }

void set_execution_policy(ExecutionPolicy policy) { g_deterministic.store(policy.deterministic); }

int apply_thread_cap_from_env() {
  int threads = omp_get_max_threads();
  if (const char* env = std::getenv("REFINE_KIT_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) {
        threads = std::min(threads, cap);
        omp_set_num_threads(threads);
      }
    } catch (const std::exception&) {
      // Unparsable values leave the OpenMP default in place.
    }
  }
  return threads;
}

}  // namespace refinekit
