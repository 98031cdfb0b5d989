#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace mmdeq {

inline int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Splits [0, total) into contiguous blocks, one per worker. Workers must
// write to disjoint outputs; block boundaries are deterministic so assembly
// order never affects results.
template <typename Fn>
void parallel_for_blocks(int total, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, total));
    if (threads == 1) {
        fn(0, total);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    int base = total / threads, rem = total % threads, start = 0;
    for (int t = 0; t < threads; ++t) {
        int len = base + (t < rem ? 1 : 0);
        pool.emplace_back([&fn, start, len] { fn(start, start + len); });
        start += len;
    }
    for (auto& th : pool) th.join();
}

}  // namespace mmdeq
