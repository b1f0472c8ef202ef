#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace zskl {

/// Runs fn(i) for i in [0, n) on up to `threads` threads. Each index is
/// handled exactly once; callers write results into per-index slots. The first
/// exception thrown by any task is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn &&fn) {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) { fn(i); }
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) { error = std::current_exception(); }
                    return;
                }
            }
        });
    }
    for (auto &t : pool) { t.join(); }
    if (error) { std::rethrow_exception(error); }
}

}  // namespace zskl
