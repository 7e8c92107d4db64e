#pragma once

// Minimal deterministic parallel map: tasks are indexed, each worker owns a
// strided slice, results land in index order, so reductions downstream are
// reproducible regardless of scheduling.

#include <cstddef>
#include <thread>
#include <vector>

namespace hbl {

template <typename Fn>
inline void parallel_for_index(std::size_t count, Fn&& fn) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(hw, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace hbl
