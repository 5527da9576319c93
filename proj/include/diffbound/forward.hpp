#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "rng.hpp"
#include "schedule.hpp"

namespace diffbound {

using Point = Eigen::VectorXd;
/// Column-major batch of points, one point per column (D x B).
using Batch = Eigen::MatrixXd;

template <class Derived>
void fill_normal(Eigen::DenseBase<Derived>& out, Rng& rng) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = rng.normal();
}

inline Point standard_normal(Eigen::Index dim, Rng& rng) {
    Point e(dim);
    fill_normal(e, rng);
    return e;
}

inline Batch standard_normal(Eigen::Index dim, Eigen::Index cols, Rng& rng) {
    Batch e(dim, cols);
    fill_normal(e, rng);
    return e;
}

/// Draws x_t ~ q(x_t | x_0) = N(sqrt(abar_t) x_0, (1 - abar_t) I).
inline Point sample_forward_marginal(const NoiseSchedule& s, const Point& x0, int t, Rng& rng) {
    check_step(s, t, 1, "sample_forward_marginal");
    const double ab = s.alpha_bar(t);
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * standard_normal(x0.size(), rng);
}

/// Runs q(x_t | x_{t-1}) one step at a time from x_0 up to x_t.
inline Point sample_forward_path(const NoiseSchedule& s, const Point& x0, int t, Rng& rng) {
    check_step(s, t, 1, "sample_forward_path");
    Point x = x0;
    for (int k = 1; k <= t; ++k) {
        const double a = s.alpha(k);
        x = std::sqrt(a) * x + std::sqrt(1.0 - a) * standard_normal(x.size(), rng);
    }
    return x;
}

/// Mean of q(x_{t-1} | x_t, x_0); affine in both arguments.
inline Point posterior_mean(const NoiseSchedule& s, const Point& x_t, const Point& x0, int t) {
    check_step(s, t, 2, "posterior_mean");
    if (x_t.size() != x0.size()) throw std::invalid_argument("posterior_mean: dimension mismatch");
    return schedule_lipschitz(s, t) * x_t + posterior_x0_coef(s, t) * x0;
}

// KL(q(x_T | x_0) || N(0, I)) = 0.5 [-D log(1 - abar_T) - D abar_T + abar_T |x_0|^2]
inline double prior_kl(const NoiseSchedule& s, const Point& x0) {
    const double ab = s.alpha_bar(s.T());
    if (!(ab < 1.0)) throw std::invalid_argument("prior_kl: alpha_bar_T must be < 1");
    const double d = static_cast<double>(x0.size());
    return 0.5 * (-d * std::log1p(-ab) - d * ab + ab * x0.squaredNorm());
}

}  // namespace diffbound
