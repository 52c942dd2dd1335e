#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace askbench {

// Runs fn(0..n-1) with at most max_concurrency worker threads and returns
// results in index order. fn is expected to absorb its own failures into
// the result type (e.g. a variant slot); if one escapes anyway, the first
// exception is rethrown after all workers have joined.
template <typename Fn>
auto parallel_map(size_t n, int max_concurrency, Fn&& fn)
    -> std::vector<std::decay_t<std::invoke_result_t<Fn&, size_t>>> {
    using T = std::decay_t<std::invoke_result_t<Fn&, size_t>>;

    std::vector<std::optional<T>> slots(n);
    if (n == 0) return {};

    size_t workers = static_cast<size_t>(max_concurrency < 1 ? 1 : max_concurrency);
    if (workers > n) workers = n;

    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    if (first_error) std::rethrow_exception(first_error);

    std::vector<T> out;
    out.reserve(n);
    for (std::optional<T>& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace askbench
