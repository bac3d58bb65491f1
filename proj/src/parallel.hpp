#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace crowdsched {

/// Runs body(i) for i in [0, n) on up to `threads` workers, contiguous chunks each.
/// Bodies must write disjoint state; results do not depend on the thread count.
/// The exception from the lowest failing chunk is rethrown after all workers join.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body)
{
    const auto workers = std::min<std::size_t>(std::max(1U, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const auto chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const auto begin = w * chunk;
            const auto end = std::min(n, begin + chunk);
            pool.emplace_back([begin, end, w, &body, &errors] {
                try {
                    for (auto i = begin; i < end; ++i) {
                        body(i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace crowdsched
