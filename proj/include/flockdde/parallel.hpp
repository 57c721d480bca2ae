#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace flockdde {

/// Runs body(i) for i in [0, n) on up to `threads` threads with static
/// contiguous chunks. body must only write state owned by index i.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) {
            break;
        }
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) {
                body(i);
            }
        });
    }
}

} // namespace flockdde
