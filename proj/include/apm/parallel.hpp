#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace apm {

/// Process-wide cap on worker threads. Results never depend on it: work is
/// split into fixed-size blocks and reductions run over blocks in order.
void set_thread_limit(unsigned threads);
[[nodiscard]] unsigned thread_limit();

/// Calls fn(block_index, begin, end) for each block of `block` items in
/// [0, count). Blocks are distributed over at most thread_limit() threads.
void for_each_block(std::size_t count, std::size_t block,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

[[nodiscard]] inline std::size_t block_count(std::size_t count, std::size_t block) {
    return (count + block - 1) / block;
}

}  // namespace apm
