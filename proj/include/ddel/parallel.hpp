#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace ddel {

/// Run f(i) for i in [0, n) on up to `threads` workers in contiguous chunks.  Callers
/// must keep per-index writes independent; reductions stay deterministic by summing in
/// index order afterwards.
template <typename F>
void parallel_for(int n, int threads, F&& f) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&f, begin, end] {
            for (int i = begin; i < end; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace ddel
