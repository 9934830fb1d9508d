#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace floquet {

inline int resolve_threads(int threads) {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count); the first exception is rethrown after all workers stop.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    const int nt = std::clamp(resolve_threads(threads), 1, std::max(count, 1));
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex m;
    auto work = [&]() {
        for (int i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(m);
                if (!err) err = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace floquet
