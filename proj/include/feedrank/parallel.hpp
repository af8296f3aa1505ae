#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace feedrank {

// Every parallel region in this project maps an index range with fn(i)
// touching only index-i output slots; reductions happen afterwards in index
// order. Serial and parallel mode therefore produce identical bits, and the
// serial path doubles as the reference implementation for the tests and
// benchmarks.
enum class ExecMode { serial, parallel };

template <class F>
void parallel_for(std::size_t n, ExecMode mode, F&& fn) {
#ifdef _OPENMP
  if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)mode;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace feedrank
