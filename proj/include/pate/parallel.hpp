#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace pate {

/// Runs fn(0..n-1) on up to `workers` threads. Jobs must be independent and
/// write to disjoint output slots; completion order is unspecified, so results
/// must not depend on scheduling. With workers <= 1 everything runs inline.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Contiguous chunk [begin, end) for worker w of `workers` over n items.
/// Sizes differ by at most one; the split depends only on (n, workers).
inline std::pair<std::size_t, std::size_t> chunk_bounds(std::size_t n, int workers, int w) {
    const std::size_t k = static_cast<std::size_t>(workers);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    const std::size_t ww = static_cast<std::size_t>(w);
    const std::size_t begin = ww * base + std::min(ww, extra);
    const std::size_t end = begin + base + (ww < extra ? 1 : 0);
    return {begin, end};
}

}  // namespace pate
