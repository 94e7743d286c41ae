#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace simclust {

/// Worker count used by parallel_for. Controlled by the SIMCLUST_THREADS
/// environment variable; defaults to the hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("SIMCLUST_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Apply fn(i) for i in [0, n). Work items must be independent; results are
/// deterministic because each index writes only its own outputs.
template <typename Fn>
void parallel_for(long n, Fn&& fn) {
    int workers = std::min<long>(thread_count(), n);
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([=, &fn] {
            for (long i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace simclust
