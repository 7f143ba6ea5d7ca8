#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace diffnet {

/// Worker count: `requested` if positive, else $DIFFNET_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/**
 * Calls f(i) for i in [0, n) on up to `threads` workers.
 *
 * Work is handed out through a shared counter; callers write results into
 * slot i so the output never depends on completion order. The exception
 * thrown for the smallest index is rethrown after all workers join.
 */
template <class F>
void parallel_for(std::size_t n, int threads, F&& f)
{
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(threads > 0 ? threads : 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    std::size_t err_index = n;

    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    pool.clear();
    if (err) std::rethrow_exception(err);
}

} // namespace diffnet
