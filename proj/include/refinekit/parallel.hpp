#pragma once

namespace refinekit {

// Process-wide execution settings for the OpenMP kernels.
//
// In deterministic mode every reduction is evaluated as per-row partials
// followed by a serial sum in index order, so results are bitwise identical
// to the serial reference kernels regardless of thread count. Otherwise
// scalar reductions use OpenMP's reduction clause.
struct ExecutionPolicy {
  bool deterministic = true;
};

ExecutionPolicy execution_policy();
void set_execution_policy(ExecutionPolicy policy);

// Applies REFINE_KIT_THREADS (if set) as an upper bound on OpenMP workers.
// Returns the resulting worker count.
int apply_thread_cap_from_env();

// RAII override used by tests and the trainer.
class ScopedExecutionPolicy {
 public:
  explicit ScopedExecutionPolicy(ExecutionPolicy policy) : saved_(execution_policy()) {
    set_execution_policy(policy);
  }
  ~ScopedExecutionPolicy() { set_execution_policy(saved_); }
  ScopedExecutionPolicy(const ScopedExecutionPolicy&) = delete;
  ScopedExecutionPolicy& operator=(const ScopedExecutionPolicy&) = delete;

 private:
  ExecutionPolicy saved_;
};

}  // namespace refinekit
