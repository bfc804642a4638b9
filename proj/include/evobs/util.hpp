#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace evobs {

/// int_0^t exp(-2 mu s) ds, stable for small |mu t| and fine with mu < 0.
inline double decay_integral(double mu, double t) {
    const double x = 2.0 * mu * t;
    if (std::abs(x) < 1e-8) return t * (1.0 - 0.5 * x + x * x / 6.0);
    return (1.0 - std::exp(-x)) / (2.0 * mu);
}

/// Stable per-index sub-seed derivation so sampling loops stay deterministic
/// under any worker count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Run fn(i) for i in [0, count) on up to `workers` threads. Results must be
/// written to pre-sized slots; iteration order is not observable. The first
/// worker exception is rethrown on the calling thread after the join.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const int n_threads = std::min(workers, count);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                if (failed.load(std::memory_order_relaxed)) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace evobs
