#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace mrisk {

// Chunked parallel loop over [0, n). Work items must write to disjoint state;
// the variates behind each item are counter-based, so the result is the same
// for any thread count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned n_threads, Fn&& fn) {
    if (n == 0) return;
    if (n_threads <= 1 || n < 2 * n_threads) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t lo = static_cast<std::size_t>(t) * chunk;
        if (lo >= n) break;
        const std::size_t hi = std::min(n, lo + chunk);
        workers.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

inline unsigned default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace mrisk
