#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace diffbound {

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// A Monte-Carlo estimate: sample mean with its standard error.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

inline Estimate summarize(std::span<const double> xs) {
    Estimate e;
    e.count = xs.size();
    if (xs.empty()) return e;
    const double n = static_cast<double>(xs.size());
    e.mean = pairwise_sum(xs) / n;
    if (xs.size() > 1) {
        std::vector<double> sq(xs.size());
        std::transform(xs.begin(), xs.end(), sq.begin(), [&](double x) { return (x - e.mean) * (x - e.mean); });
        const double var = pairwise_sum(sq) / (n - 1.0);
        e.std_error = std::sqrt(var / n);
    }
    return e;
}

// Runs body(i) for i in [0, n_tasks). Task-to-thread assignment is strided but
// every body writes only its own slot, so results never depend on `workers`.
inline void parallel_for(std::size_t n_tasks, std::size_t workers, const std::function<void(std::size_t)>& body) {
    workers = std::max<std::size_t>(1, std::min(workers, n_tasks));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n_tasks; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace diffbound
