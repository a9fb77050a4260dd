#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace fbsde {

/// Runs fn(chunk_index, begin, end) over [0, count) split into fixed-size
/// chunks. The chunk partition never depends on the worker count, and chunks
/// write only to their own slice or to per-chunk slots that callers combine
/// in ascending chunk order afterwards — so results are bit-identical for any
/// number of workers.
inline void parallel_chunks(std::int64_t count, int workers,
                            const std::function<void(int, std::int64_t, std::int64_t)>& fn,
                            std::int64_t chunk_size = 2048) {
    if (count <= 0) return;
    const int num_chunks = static_cast<int>((count + chunk_size - 1) / chunk_size);
    auto run_chunk = [&](int c) {
        const std::int64_t begin = static_cast<std::int64_t>(c) * chunk_size;
        const std::int64_t end = std::min<std::int64_t>(begin + chunk_size, count);
        fn(c, begin, end);
    };
    if (workers <= 1 || num_chunks == 1) {
        for (int c = 0; c < num_chunks; ++c) run_chunk(c);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= num_chunks) return;
            run_chunk(c);
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min(workers, num_chunks);
    pool.reserve(n - 1);
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

inline int chunk_count(std::int64_t count, std::int64_t chunk_size = 2048) {
    return count <= 0 ? 0 : static_cast<int>((count + chunk_size - 1) / chunk_size);
}

} // namespace fbsde
