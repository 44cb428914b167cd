#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tefs::evaluation::detail {

// Runs fn(i) for i in [0, n) on up to `jobs` threads pulling from a shared
// counter. The first exception stops further pickup and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    if (threads == 1 || n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace tefs::evaluation::detail
