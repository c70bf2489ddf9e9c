#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace uwind {

/// Run f(0..n-1) across up to `threads` workers. Callers get deterministic
/// results by writing into preallocated per-index slots. The first exception
/// thrown by any worker is rethrown on the calling thread.
template <class F>
void parallel_for(int n, int threads, F&& f) {
    if (n <= 0) return;
    if (threads < 1) threads = 1;
    if (threads == 1 || n == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace uwind
