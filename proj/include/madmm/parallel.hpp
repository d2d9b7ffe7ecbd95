#pragma once

// Sample-parallel kernels. Every loop here has a serial reference path; the
// OpenMP path evaluates the same per-index work and leaves every reduction to
// a fixed-order serial pass, so both paths produce bit-identical results.

#include "madmm/types.hpp"

#include <exception>
#include <vector>

#ifdef MADMM_HAVE_OPENMP
#include <omp.h>
#endif

namespace madmm {

enum class Execution { serial, parallel };

inline Execution default_execution() {
#ifdef MADMM_HAVE_OPENMP
  return Execution::parallel;
#else
  return Execution::serial;
#endif
}

inline int worker_count() {
#ifdef MADMM_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Calls f(i) for i in [0, n). Exceptions are rethrown after the loop; when
/// several indices throw, the one with the smallest index wins.
template <class F>
void for_each_index(Execution exec, Index n, F&& f) {
  if (exec == Execution::serial || n < 2) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
#ifdef MADMM_HAVE_OPENMP
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
#else
  for (Index i = 0; i < n; ++i) f(i);
#endif
}

/// values[i] = f(i).
template <class F>
std::vector<double> map_indices(Execution exec, Index n, F&& f) {
  std::vector<double> values(static_cast<std::size_t>(n));
  for_each_index(exec, n,
                 [&](Index i) { values[static_cast<std::size_t>(i)] = f(i); });
  return values;
}

struct MaxReduction {
  double value = -kInfinity;
  Index argmax = -1;
};

/// Left-to-right scan; ties keep the first index. NaN entries count as +inf.
inline MaxReduction reduce_max(const std::vector<double>& values) {
  MaxReduction r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i] != values[i] ? kInfinity : values[i];
    if (v > r.value) {
      r.value = v;
      r.argmax = static_cast<Index>(i);
    }
  }
  return r;
}

}  // namespace madmm
