#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace asiplab {

// Fans replica indices out to a worker pool. Work items must write only to
// their own slot; results are then independent of the worker count.
inline void parallel_replicas(std::size_t count, int workers,
                              const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t r = 0; r < count; ++r) fn(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(workers, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t r = next.fetch_add(1);
                if (r >= count) break;
                fn(r);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace asiplab
