#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace zsfuse::detail {

// Runs fn(begin, end) over contiguous row blocks. Each row is owned by exactly
// one block, so results do not depend on the schedule.
template <typename Fn>
void parallel_rows(std::size_t n, Fn&& fn, std::size_t min_block = 64) {
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(hw, (n + min_block - 1) / min_block);
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t block = (n + workers - 1) / workers;
    std::exception_ptr failure;
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * block;
            const std::size_t e = std::min(n, b + block);
            if (b >= e) break;
            pool.emplace_back([&, b, e] {
                try {
                    fn(b, e);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace zsfuse::detail
