#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coxsn {

/// Runs body(rep) for rep in [0, reps) on contiguous chunks across workers.
/// Each replication must write only to its own slot; callers reduce the
/// slots in index order so results do not depend on the worker count.
template <class Body>
void for_each_replication(std::size_t reps, Body&& body, unsigned workers = 0) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(reps, 1)));
    if (workers <= 1) {
        for (std::size_t r = 0; r < reps; ++r) body(r);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (reps + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(reps, lo + chunk);
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t r = lo; r < hi; ++r) body(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace coxsn
