#pragma once

// Batch execution helpers. Every batch kernel in the library takes an Exec
// argument: Exec::Serial is the plain loop kept as the reference
// implementation, Exec::Parallel distributes independent items over OpenMP
// threads. Items write only to their own output slot, so both paths produce
// bit-identical results regardless of the thread count.

#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace finslercaps {

enum class Exec { Serial, Parallel };

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

/// Calls body(i) for i in [0, n). Exceptions thrown inside a parallel region
/// are captured and the one with the smallest index is rethrown afterwards.
template <class Body>
void parallel_for(std::size_t n, Exec exec, Body&& body) {
    if (exec == Exec::Serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr first;
    std::size_t first_index = n;
    std::mutex guard;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (static_cast<std::size_t>(i) < first_index) {
                first_index = static_cast<std::size_t>(i);
                first = std::current_exception();
            }
        }
    }
    if (first) std::rethrow_exception(first);
}

template <class Fn>
auto parallel_map(std::size_t n, Exec exec, Fn&& fn) {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    parallel_for(n, exec, [&](std::size_t i) { slots[i].emplace(fn(i)); });
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// Independent random stream for item `index` of a batch seeded by `seed`.
inline std::mt19937_64 item_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    return std::mt19937_64(seq);
}

} // namespace finslercaps
