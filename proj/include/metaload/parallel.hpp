#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace metaload {

enum class Execution { serial, parallel };

/// Runs fn(i) for i in [0, n). With Execution::parallel the iterations are
/// spread over OpenMP threads. If any iteration throws, the exception of the
/// lowest index is rethrown after the loop, so failures do not depend on
/// scheduling.
template <class F>
void for_each_index(std::size_t n, Execution exec, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace metaload
