#include "apm/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>

namespace apm {

namespace {

std::atomic<unsigned> g_thread_limit{0};

}  // namespace

void set_thread_limit(unsigned threads) { g_thread_limit.store(threads); }

unsigned thread_limit() {
    const unsigned set = g_thread_limit.load();
    if (set > 0) {
        return set;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void for_each_block(std::size_t count, std::size_t block,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (count == 0) {
        return;
    }
    const std::size_t blocks = block_count(count, block);
    const std::size_t workers = std::min<std::size_t>(thread_limit(), blocks);
    auto run = [&](std::size_t b) { fn(b, b * block, std::min(count, (b + 1) * block)); };
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) {
            run(b);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
                try {
                    run(b);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace apm
