#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sidarthe {

/// Worker count: the SIDARTHE_GF_WORKERS environment variable when set to a
/// positive integer, otherwise hardware concurrency, never less than 1.
inline std::size_t default_workers() {
    if (const char* env = std::getenv("SIDARTHE_GF_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Run f(0), ..., f(n-1) on up to `workers` threads. Tasks are claimed from
/// a shared counter; each index runs exactly once. The first exception is
/// rethrown on the calling thread after all workers finish. Determinism is
/// the caller's job: each task must write only to its own output slot.
template <typename F>
inline void parallel_for(std::size_t n, std::size_t workers, F&& f) {
    if (n == 0) return;
    if (workers == 0) workers = default_workers();
    if (workers > n) workers = n;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mu;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace sidarthe
