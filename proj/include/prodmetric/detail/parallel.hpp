#ifndef PRODMETRIC_DETAIL_PARALLEL_HPP
#define PRODMETRIC_DETAIL_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

namespace prodmetric::detail {

// Smallest index i in [0,n) with hit(i) == true. Workers own contiguous
// index ranges and stop once a smaller hit is known, so the result does not
// depend on the number of threads or their scheduling.
template <class Fn>
std::optional<std::size_t> first_index(std::size_t n, unsigned threads, Fn&& hit) {
    if (n == 0) return std::nullopt;
    if (threads <= 1 || n < 2 * threads) {
        for (std::size_t i = 0; i < n; ++i)
            if (hit(i)) return i;
        return std::nullopt;
    }
    std::atomic<std::size_t> best{n};
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) {
                if (i >= best.load(std::memory_order_relaxed)) return;
                if (hit(i)) {
                    std::size_t cur = best.load(std::memory_order_relaxed);
                    while (i < cur && !best.compare_exchange_weak(cur, i)) {
                    }
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    std::size_t b = best.load();
    if (b == n) return std::nullopt;
    return b;
}

struct SupResult {
    double value;
    std::size_t index;
};

// Argmax of value(i) over [0,n); ties resolved toward the smallest index.
// Indices with value == -inf are treated as skipped.
template <class Fn>
std::optional<SupResult> sup_index(std::size_t n, unsigned threads, Fn&& value) {
    constexpr double kSkip = -std::numeric_limits<double>::infinity();
    auto scan = [&](std::size_t lo, std::size_t hi) -> std::optional<SupResult> {
        std::optional<SupResult> best;
        for (std::size_t i = lo; i < hi; ++i) {
            double v = value(i);
            if (v == kSkip) continue;
            if (!best || v > best->value) best = SupResult{v, i};
        }
        return best;
    };
    if (threads <= 1 || n < 2 * threads) return scan(0, n);
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::optional<SupResult>> partial(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi] { partial[t] = scan(lo, hi); });
    }
    for (auto& th : pool) th.join();
    std::optional<SupResult> best;
    for (const auto& r : partial) {
        if (!r) continue;
        if (!best || r->value > best->value || (r->value == best->value && r->index < best->index))
            best = r;
    }
    return best;
}

}  // namespace prodmetric::detail

#endif  // PRODMETRIC_DETAIL_PARALLEL_HPP
