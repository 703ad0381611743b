#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stq {

/// Grid kernels come in two flavours: `serial` is the reference path kept
/// for testing, `parallel` distributes independent grid points over OpenMP
/// threads. Both write results by grid index, so outputs are identical.
enum class Execution { serial, parallel };

/// Caps the OpenMP worker count (the CLI's --jobs). Values < 1 are ignored.
inline void set_worker_count(int jobs) {
#ifdef _OPENMP
    if (jobs >= 1) {
        omp_set_num_threads(jobs);
    }
#else
    (void)jobs;
#endif
}

/// Runs body(i) for i in [0, n). Exceptions are collected per index and the
/// one with the lowest index is rethrown, so failures are deterministic too.
template <typename Body>
void for_each_index(std::size_t n, Execution policy, Body&& body) {
    if (policy == Execution::serial) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> failures(n);
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            failures[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
}

}  // namespace stq
