#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace crosstag {

// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
// Blocks are defined by block_size alone, never by the thread count, so
// per-block results can be merged in block order and any reduction is
// bitwise identical for threads == 1 and threads == N.
inline void for_each_block(std::size_t n, std::size_t block_size, int threads,
                           const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (block_size == 0) block_size = 1;
    const std::size_t num_blocks = (n + block_size - 1) / block_size;
    if (threads <= 1 || num_blocks == 1) {
        for (std::size_t b = 0; b < num_blocks; ++b)
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t b = next.fetch_add(1);
            if (b >= num_blocks) return;
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    const std::size_t pool_size =
        std::min<std::size_t>(static_cast<std::size_t>(threads), num_blocks);
    pool.reserve(pool_size);
    for (std::size_t t = 0; t < pool_size; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
}

}  // namespace crosstag
