#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "moyo/errors.hpp"

namespace moyo {

// Runs fn(i) for i in [begin, end) across the requested number of threads.
// Work items must write to disjoint locations; results may not depend on the
// partition, which keeps outputs identical for every thread count.
inline void parallel_for(int begin, int end, int threads,
                         const std::function<void(int)>& fn) {
    if (end <= begin) return;
    if (threads < 1) throw ConfigError("thread count must be at least 1");
    const int total = end - begin;
    threads = std::min(threads, total);
    if (threads == 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const int chunk = (total + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&, lo, hi]() {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace moyo
