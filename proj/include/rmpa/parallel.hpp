#ifndef RMPA_PARALLEL_HPP
#define RMPA_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rmpa {

//! Run fn(i) for i in [0, n) on `workers` threads. Tasks are pulled from an
//! atomic counter; result ordering is the caller's concern (index into a
//! preallocated buffer). The first exception is rethrown after all threads
//! join, so partial results are never observed.
template <typename Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    size_t n_threads = std::min<size_t>(static_cast<size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace rmpa

#endif
