#ifndef FUSEBENCH_SRC_PARALLEL_HPP
#define FUSEBENCH_SRC_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fusebench::detail {

// Run body(i) for i in [0, n) on up to `threads` workers (<= 0 picks the
// hardware concurrency). Work items must be independent; any exception stops
// the pool and the one thrown by the lowest observed index is rethrown.
template <typename Fn>
void parallel_for_index(long n, int threads, Fn&& body) {
    if (n <= 0) {
        return;
    }
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
    }
    if (threads < 1) {
        threads = 1;
    }
    if (static_cast<long>(threads) > n) {
        threads = static_cast<int>(n);
    }
    if (threads == 1) {
        for (long i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<long> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    long first_error_index = -1;
    auto worker = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const long i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error_index < 0 || i < first_error_index) {
                    first_error = std::current_exception();
                    first_error_index = i;
                }
                stop.store(true, std::memory_order_relaxed);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace fusebench::detail

#endif
