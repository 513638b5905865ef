#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sievebias {

// Execution switch for the data-parallel kernels. Every kernel has a serial
// path and an OpenMP path computing bit-identical results: reductions are
// either order-independent (max/min) or accumulated over a fixed chunk
// partition whose combination order does not depend on the thread count.
enum class Exec { serial, parallel };

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

// Fixed partition of [0, n) into at most `groups` contiguous chunks.
// The partition depends only on n and groups, never on the thread count.
inline std::vector<std::pair<std::size_t, std::size_t>> fixed_chunks(std::size_t n,
                                                                     std::size_t groups) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (n == 0) return out;
    if (groups == 0) groups = 1;
    const std::size_t len = (n + groups - 1) / groups;
    for (std::size_t lo = 0; lo < n; lo += len) out.emplace_back(lo, std::min(lo + len, n));
    return out;
}

// max-reduction over i in [0, n); fn(i) must be reentrant
template <typename Fn>
double reduce_max(std::size_t n, Exec exec, Fn&& fn, double init) {
    double result = init;
    if (exec == Exec::parallel) {
#pragma omp parallel for reduction(max : result) schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            const double v = fn(static_cast<std::size_t>(i));
            if (v > result) result = v;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = fn(i);
            if (v > result) result = v;
        }
    }
    return result;
}

template <typename Fn>
double reduce_min(std::size_t n, Exec exec, Fn&& fn, double init) {
    double result = init;
    if (exec == Exec::parallel) {
#pragma omp parallel for reduction(min : result) schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            const double v = fn(static_cast<std::size_t>(i));
            if (v < result) result = v;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = fn(i);
            if (v < result) result = v;
        }
    }
    return result;
}

// parallel for without reduction (each index writes its own slot)
template <typename Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            fn(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) fn(i);
    }
}

}  // namespace sievebias
