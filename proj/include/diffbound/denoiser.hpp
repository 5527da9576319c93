#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "data.hpp"
#include "forward.hpp"
#include "mlp.hpp"
#include "schedule.hpp"

namespace diffbound {

/// Schedule + noise-prediction net + the bounded instance space the decoder maps into.
struct DiffusionModel {
    NoiseSchedule schedule;
    DenoiserNet net;
    Box domain_box;

    int dim() const { return net.config().dim; }
    int T() const { return schedule.T(); }

    void check() const {
        domain_box.check();
        if (domain_box.dim() != dim()) throw std::invalid_argument("model: domain box dimension != net dimension");
    }

    bool operator==(const DiffusionModel&) const = default;
};

/// Backward mean g^t(x) = (x - (1 - alpha_t)/sqrt(1 - abar_t) * eps_net(x, t)) / sqrt(alpha_t),
/// applied to every column.
inline Batch g_mean(const DiffusionModel& m, const Batch& x, int t) {
    check_step(m.schedule, t, 1, "g_mean");
    const double a = m.schedule.alpha(t);
    const double coef = (1.0 - a) / std::sqrt(1.0 - m.schedule.alpha_bar(t));
    return (x - coef * m.net.predict(x, t)) / std::sqrt(a);
}

inline Point g_mean(const DiffusionModel& m, const Point& x, int t) {
    return g_mean(m, Batch(x), t).col(0);
}

/// Deterministic final step x_1 -> x_0: g^1 clamped into the domain box.
inline Batch decode(const DiffusionModel& m, const Batch& x1) {
    Batch out = g_mean(m, x1, 1);
    m.domain_box.clamp_inplace(out);
    return out;
}

inline Point decode(const DiffusionModel& m, const Point& x1) { return decode(m, Batch(x1)).col(0); }

/// x_{t-1} = g^t(x_t) + sigma_t eps for t in [2,T]. Noise is drawn column by column.
inline Batch backward_step(const DiffusionModel& m, const Batch& x, int t, Rng& rng) {
    check_step(m.schedule, t, 2, "backward_step");
    Batch out = g_mean(m, x, t);
    const double sigma = m.schedule.sigma(t);
    out += sigma * standard_normal(out.rows(), out.cols(), rng);
    return out;
}

inline Point backward_step(const DiffusionModel& m, const Point& x, int t, Rng& rng) {
    return backward_step(m, Batch(x), t, rng).col(0);
}

/// Full backward chain from x_T: steps T..2 then decode.
inline Batch reconstruct(const DiffusionModel& m, Batch x, Rng& rng) {
    for (int t = m.T(); t >= 2; --t) x = backward_step(m, x, t, rng);
    return decode(m, x);
}

inline Point reconstruct(const DiffusionModel& m, const Point& x_T, Rng& rng) {
    return reconstruct(m, Batch(x_T), rng).col(0);
}

/// n samples from the learned distribution: x_T ~ N(0, I) then reconstruct.
inline Batch generate(const DiffusionModel& m, Eigen::Index n, Rng& rng) {
    Batch x = standard_normal(m.dim(), n, rng);
    return reconstruct(m, std::move(x), rng);
}

inline Point generate(const DiffusionModel& m, Rng& rng) { return generate(m, 1, rng).col(0); }

// ---- Lipschitz probing ----

/// Max over n_pairs of |f(x) - f(x + d)| / |d|, x uniform in `box`, d uniform on the
/// sphere of radius pair_scale. `map` takes and returns a D x B batch.
/// The result never exceeds the true Lipschitz constant of `map`.
template <class Map>
double probe_lipschitz_of(const Map& map, const Box& box, std::size_t n_pairs, double pair_scale, Rng& rng) {
    if (n_pairs < 1) throw std::invalid_argument("estimate_lipschitz: n_pairs must be >= 1");
    if (!(pair_scale > 0)) throw std::invalid_argument("estimate_lipschitz: pair_scale must be > 0");
    const Eigen::Index d = box.dim();
    const auto n = static_cast<Eigen::Index>(n_pairs);
    Batch x(d, n), y(d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        x.col(j) = box.sample(rng);
        Point dir = standard_normal(d, rng);
        double norm = dir.norm();
        while (norm == 0.0) {
            dir = standard_normal(d, rng);
            norm = dir.norm();
        }
        y.col(j) = x.col(j) + (pair_scale / norm) * dir;
    }
    const Batch fx = map(x);
    const Batch fy = map(y);
    double best = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double r = (fx.col(j) - fy.col(j)).norm() / (x.col(j) - y.col(j)).norm();
        best = std::max(best, r);
    }
    return best;
}

/// Probed Lipschitz estimate of g^t (t >= 2) or of decode (t = 1).
inline double estimate_lipschitz(const DiffusionModel& m, int t, std::size_t n_pairs, double pair_scale, Rng& rng) {
    check_step(m.schedule, t, 1, "estimate_lipschitz");
    if (t == 1) return probe_lipschitz_of([&](const Batch& x) { return decode(m, x); }, m.domain_box, n_pairs, pair_scale, rng);
    return probe_lipschitz_of([&](const Batch& x) { return g_mean(m, x, t); }, m.domain_box, n_pairs, pair_scale, rng);
}

struct ProbeConfig {
    std::size_t n_pairs = 4096;
    std::vector<double> scales{1e-2, 1e-1, 1.0};
};

/// Max of estimate_lipschitz over all configured pair scales.
inline double probe_lipschitz(const DiffusionModel& m, int t, const ProbeConfig& cfg, Rng& rng) {
    double best = 0.0;
    for (double s : cfg.scales) best = std::max(best, estimate_lipschitz(m, t, cfg.n_pairs, s, rng));
    return best;
}

}  // namespace diffbound
