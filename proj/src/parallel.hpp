#pragma once

// Index-parallel loop shared by the kernels. Each iteration writes only its own
// output slot, so results do not depend on scheduling. The first exception
// thrown by any iteration is rethrown on the calling thread.

#include <cstddef>
#include <exception>
#include <mutex>

#include "tomo/execution.hpp"

namespace tomo::detail {

template <class Fn>
void for_each_index(std::ptrdiff_t count, Execution exec, Fn&& fn) {
  if (exec == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace tomo::detail
