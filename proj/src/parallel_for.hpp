#pragma once

#include <algorithm>
#include <exception>
#include <vector>

namespace enclab::detail {

/// Runs body(i) for i in [0, n) on `jobs` threads; rethrows the lowest-index failure.
template <class F>
void parallel_for(int n, int jobs, F&& body) {
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
#pragma omp parallel for num_threads(std::max(1, jobs)) schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace enclab::detail
