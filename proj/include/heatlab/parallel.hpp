#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace heatlab {

/// Worker count for parallel sweeps. HEATLAB_WORKERS overrides; the result is
/// only a throughput knob, never an output knob: every task writes its own
/// slot, so reports are identical for any worker count.
inline int worker_count() {
    if (const char* env = std::getenv("HEATLAB_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
/// Static index striping; body must only touch slot i of shared outputs.
inline void parallel_for(int count, const std::function<void(int)>& body,
                         int workers = 0) {
    if (workers <= 0) workers = worker_count();
    workers = std::min(workers, std::max(count, 1));
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (int i = w; i < count; i += workers) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace heatlab
