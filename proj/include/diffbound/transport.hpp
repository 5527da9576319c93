#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace diffbound {

enum class W1Kind { exact, lower_bound, upper_bound };

inline std::string to_string(W1Kind k) {
    switch (k) {
        case W1Kind::exact: return "exact";
        case W1Kind::lower_bound: return "lower_bound";
        case W1Kind::upper_bound: return "upper_bound";
    }
    return "?";
}

struct W1Estimate {
    double value = 0.0;
    W1Kind kind = W1Kind::exact;
    nlohmann::json meta = nlohmann::json::object();
};

inline constexpr std::size_t kExactSizeLimit = 512;

/// Minimum-cost perfect matching on a square cost matrix (row-major, n x n).
/// Shortest augmenting paths with potentials, O(n^3). Returns col assigned to each row.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<double>& cost, std::size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based internals; index 0 is the virtual source column
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

/// W1 between two equal-size empirical measures via optimal assignment.
inline W1Estimate exact_w1(const std::vector<Point>& a, const std::vector<Point>& b,
                           std::size_t size_limit = kExactSizeLimit) {
    if (a.size() != b.size()) throw std::invalid_argument("exact_w1: sets must have equal size");
    if (a.size() > size_limit)
        throw std::invalid_argument("exact_w1: size " + std::to_string(a.size()) + " exceeds limit " +
                                    std::to_string(size_limit));
    W1Estimate est;
    est.kind = W1Kind::exact;
    est.meta = {{"n", a.size()}};
    const std::size_t n = a.size();
    if (n == 0) return est;
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = (a[i] - b[j]).norm();
    const auto match = min_cost_assignment(cost, n);
    std::vector<double> matched(n);
    for (std::size_t i = 0; i < n; ++i) matched[i] = cost[i * n + match[i]];
    est.value = pairwise_sum(matched) / static_cast<double>(n);
    return est;
}

inline W1Estimate exact_w1(const SampleSet& a, const SampleSet& b, std::size_t size_limit = kExactSizeLimit) {
    return exact_w1(a.points, b.points, size_limit);
}

/// W1 between two empirical measures on the line: integral of |F - G|.
/// Inputs are sorted in place.
inline double w1_1d(std::vector<double>& xs, std::vector<double>& ys) {
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    if (xs.size() == ys.size()) {
        std::vector<double> d(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) d[i] = std::abs(xs[i] - ys[i]);
        return pairwise_sum(d) / static_cast<double>(xs.size());
    }
    const double wx = 1.0 / static_cast<double>(xs.size());
    const double wy = 1.0 / static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double fx = 0.0, fy = 0.0, total = 0.0;
    double prev = std::min(xs.front(), ys.front());
    while (i < xs.size() || j < ys.size()) {
        const double next = j == ys.size() || (i < xs.size() && xs[i] <= ys[j]) ? xs[i] : ys[j];
        total += std::abs(fx - fy) * (next - prev);
        prev = next;
        while (i < xs.size() && xs[i] == next) fx += wx, ++i;
        while (j < ys.size() && ys[j] == next) fy += wy, ++j;
    }
    return total;
}

/// Max over random unit directions of the 1-D W1 between projections.
/// Projection k uses the stream derived from (seed, k), so the value is independent of `workers`.
inline W1Estimate sliced_w1_lower(const std::vector<Point>& a, const std::vector<Point>& b, std::size_t n_projections,
                                  std::uint64_t seed, std::size_t workers = 1) {
    if (a.empty() || b.empty()) throw std::invalid_argument("sliced_w1_lower: empty set");
    if (n_projections < 1) throw std::invalid_argument("sliced_w1_lower: need at least one projection");
    const Eigen::Index dim = a.front().size();
    std::vector<double> per_proj(n_projections);
    parallel_for(n_projections, workers, [&](std::size_t k) {
        Rng rng(seed, "sliced.direction", k);
        Point u = standard_normal(dim, rng);
        while (u.norm() == 0.0) u = standard_normal(dim, rng);
        u.normalize();
        std::vector<double> pa(a.size()), pb(b.size());
        for (std::size_t i = 0; i < a.size(); ++i) pa[i] = u.dot(a[i]);
        for (std::size_t i = 0; i < b.size(); ++i) pb[i] = u.dot(b[i]);
        per_proj[k] = w1_1d(pa, pb);
    });
    W1Estimate est;
    est.kind = W1Kind::lower_bound;
    est.value = *std::max_element(per_proj.begin(), per_proj.end());
    est.meta = {{"n_a", a.size()}, {"n_b", b.size()}, {"projections", n_projections}, {"seed", seed}};
    return est;
}

inline W1Estimate sliced_w1_lower(const std::vector<Point>& a, const std::vector<Point>& b, std::size_t n_projections,
                                  Rng& rng) {
    return sliced_w1_lower(a, b, n_projections, rng.engine()());
}

/// Mean distance under the product coupling: an upper bound on W1.
inline W1Estimate trivial_coupling_upper(const std::vector<Point>& a, const std::vector<Point>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("trivial_coupling_upper: empty set");
    std::vector<double> rows(a.size());
    std::vector<double> row(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) row[j] = (a[i] - b[j]).norm();
        rows[i] = pairwise_sum(row) / static_cast<double>(b.size());
    }
    W1Estimate est;
    est.kind = W1Kind::upper_bound;
    est.value = pairwise_sum(rows) / static_cast<double>(a.size());
    est.meta = {{"n_a", a.size()}, {"n_b", b.size()}};
    return est;
}

inline nlohmann::json to_json(const W1Estimate& e) {
    return {{"value", e.value}, {"kind", to_string(e.kind)}, {"meta", e.meta}};
}

}  // namespace diffbound
