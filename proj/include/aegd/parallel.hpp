#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aegd {

/// Number of workers used when a parallel loop is requested.
/// Controlled by the OMP_NUM_THREADS environment variable; 1 without OpenMP.
inline int max_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs body(i) for i in [0, n).
///
/// workers == 1 is the serial reference path; it is kept (and tested
/// against the parallel path) because experiment results must be identical
/// for any worker count. Bodies must only write to their own slot.
template <class F>
void for_each_index(int n, int workers, F&& body) {
  if (workers == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers > 0 ? workers : omp_get_max_threads())
  for (int i = 0; i < n; ++i) body(i);
#else
  for (int i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace aegd
