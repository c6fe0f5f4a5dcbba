// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mmrag {

/// Runs fn(i) for i in [0, count) with at most `max_inflight` calls running at once.
/// Every index runs even if some throw; afterwards the exception from the lowest
/// failing index is rethrown, so the reported failure does not depend on scheduling.
template <class Fn>
void bounded_parallel_for(std::size_t count, std::size_t max_inflight, Fn&& fn) {
    if (count == 0) {
        return;
    }
    const std::size_t workers = std::clamp<std::size_t>(max_inflight, 1, count);
    std::vector<std::exception_ptr> errors(count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace mmrag
