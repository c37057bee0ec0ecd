#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace prefagg {

/// Evaluates fn(k) for k in [0, n) on up to `workers` threads and returns
/// the results indexed by k. Callers reduce the result vector in index
/// order, so the outcome does not depend on the worker count.
template <typename Fn>
auto map_indexed(std::size_t n, unsigned workers, Fn fn) {
    using Result = decltype(fn(std::size_t{0}));
    std::vector<Result> out(n);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n; k = next++) {
                    try {
                        out[k] = fn(k);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace prefagg
