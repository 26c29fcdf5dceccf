#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace grasscode {

inline int hardware_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs fn(0), ..., fn(n-1). With `parallel` set the iterations are spread
/// over OpenMP threads; otherwise (or without OpenMP) they run serially in
/// index order. Callers that need reproducible results must make iterations
/// independent and reduce their outputs in index order afterwards — every
/// use in this library follows that pattern, so serial and parallel runs
/// are bit-identical.
template <class F>
inline void parallel_for(int n, bool parallel, F&& fn) {
#if defined(_OPENMP)
  if (parallel && n > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
#else
  (void)parallel;
#endif
  for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace grasscode
