#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace metagtn {

// workers <= 0 means "auto": one worker per hardware thread, capped.
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<int>(std::min(hw, 16u));
}

// Runs fn(worker_id, begin, end) over a block partition of [0, count).
// Blocks are contiguous and assigned deterministically, so any computation
// whose output slots are owned per-index is reproducible across worker counts.
template <typename Fn>
void parallel_blocks(std::size_t count, int workers, Fn&& fn) {
    workers = resolve_workers(workers);
    if (count == 0) return;
    const std::size_t max_useful = count;
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), max_useful);
    if (w <= 1) {
        fn(0, std::size_t{0}, count);
        return;
    }
    const std::size_t chunk = (count + w - 1) / w;
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&fn, t, lo, hi] { fn(static_cast<int>(t), lo, hi); });
    }
    for (auto& th : threads) th.join();
}

}  // namespace metagtn
