#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mfg {

/// Worker count: MFG_THREADS if set to a positive integer, else hardware concurrency.
inline std::size_t thread_count() {
    if (const char* env = std::getenv("MFG_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls fn(i) for every i in [begin, end), split into contiguous chunks across threads.
///
/// Each index is processed exactly once and by one thread, so callers that write only to
/// slot i get results independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, std::size_t threads = thread_count()) {
    if (end <= begin) return;
    const std::size_t n = end - begin;
    threads = std::min(threads, n);
    if (threads <= 1 || n < 64) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mfg
