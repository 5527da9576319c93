#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffbound {

enum class SigmaRule { posterior, beta };

/// Fixed forward-process noise schedule. Steps are 1-based throughout the
/// public interface: alpha(t) for t in [1, T].
class NoiseSchedule {
public:
    NoiseSchedule() = default;

    /// Builds a schedule from alpha_1..alpha_T; every alpha must lie in (0,1).
    explicit NoiseSchedule(std::vector<double> alphas, SigmaRule rule = SigmaRule::posterior)
        : alphas_(std::move(alphas)), rule_(rule) {
        if (alphas_.empty()) throw std::invalid_argument("schedule: T must be >= 1");
        alpha_bars_.resize(alphas_.size());
        double prod = 1.0;
        for (std::size_t i = 0; i < alphas_.size(); ++i) {
            const double a = alphas_[i];
            if (!(a > 0.0 && a < 1.0))
                throw std::invalid_argument("schedule: alpha_" + std::to_string(i + 1) + " outside (0,1)");
            prod *= a;
            alpha_bars_[i] = prod;
        }
        sigma2_.resize(alphas_.size());
        for (std::size_t t = 1; t <= alphas_.size(); ++t) {
            if (rule_ == SigmaRule::beta) {
                sigma2_[t - 1] = 1.0 - alpha(t);
            } else {
                // at t = 1 this is the same formula with alpha_bar_0 = 1, i.e. zero
                sigma2_[t - 1] = (1.0 - alpha_bar(t - 1)) * (1.0 - alpha(t)) / (1.0 - alpha_bar(t));
            }
        }
    }

    int T() const { return static_cast<int>(alphas_.size()); }
    SigmaRule sigma_rule() const { return rule_; }

    double alpha(int t) const { return alphas_.at(static_cast<std::size_t>(t - 1)); }

    /// alpha_bar(0) == 1 by convention, used only inside formulas.
    double alpha_bar(int t) const {
        if (t == 0) return 1.0;
        return alpha_bars_.at(static_cast<std::size_t>(t - 1));
    }

    double sigma2(int t) const { return sigma2_.at(static_cast<std::size_t>(t - 1)); }
    double sigma(int t) const { return std::sqrt(sigma2(t)); }

    const std::vector<double>& alphas() const { return alphas_; }

    bool operator==(const NoiseSchedule&) const = default;

private:
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
    std::vector<double> sigma2_;
    SigmaRule rule_ = SigmaRule::posterior;
};

inline void check_beta_range(double beta_start, double beta_end) {
    if (!(beta_start > 0.0 && beta_start < 1.0) || !(beta_end > 0.0 && beta_end < 1.0))
        throw std::invalid_argument("schedule: beta must lie in (0,1)");
    if (beta_start > beta_end) throw std::invalid_argument("schedule: beta_start must not exceed beta_end");
}

/// beta_t linearly interpolated from beta_start (t=1) to beta_end (t=T).
inline NoiseSchedule linear_schedule(int T, double beta_start, double beta_end,
                                     SigmaRule rule = SigmaRule::posterior) {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    check_beta_range(beta_start, beta_end);
    std::vector<double> alphas(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        alphas[static_cast<std::size_t>(t - 1)] = 1.0 - (beta_start + frac * (beta_end - beta_start));
    }
    return NoiseSchedule(std::move(alphas), rule);
}

inline NoiseSchedule constant_schedule(int T, double beta, SigmaRule rule = SigmaRule::posterior) {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    check_beta_range(beta, beta);
    return NoiseSchedule(std::vector<double>(static_cast<std::size_t>(T), 1.0 - beta), rule);
}

/// Squared-cosine alpha_bar profile with offset s; betas clipped to [1e-8, max_beta].
inline NoiseSchedule cosine_schedule(int T, double s = 0.008, double max_beta = 0.999,
                                     SigmaRule rule = SigmaRule::posterior) {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    auto f = [&](double t) {
        const double c = std::cos((t / T + s) / (1.0 + s) * std::numbers::pi / 2.0);
        return c * c;
    };
    std::vector<double> alphas(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        double beta = 1.0 - f(t) / f(t - 1);
        beta = std::min(std::max(beta, 1e-8), max_beta);
        alphas[static_cast<std::size_t>(t - 1)] = 1.0 - beta;
    }
    return NoiseSchedule(std::move(alphas), rule);
}

inline void check_step(const NoiseSchedule& s, int t, int lo, const char* what) {
    if (t < lo || t > s.T())
        throw std::out_of_range(std::string(what) + ": step " + std::to_string(t) + " outside [" +
                                std::to_string(lo) + "," + std::to_string(s.T()) + "]");
}

/// Ground-truth posterior variance (1 - abar_{t-1})(1 - alpha_t)/(1 - abar_t), t in [2,T].
inline double posterior_variance(const NoiseSchedule& s, int t) {
    check_step(s, t, 2, "posterior_variance");
    return (1.0 - s.alpha_bar(t - 1)) * (1.0 - s.alpha(t)) / (1.0 - s.alpha_bar(t));
}

/// Lipschitz factor of x_t -> posterior mean; t in [2,T]. Always < 1.
inline double schedule_lipschitz(const NoiseSchedule& s, int t) {
    check_step(s, t, 2, "schedule_lipschitz");
    return std::sqrt(s.alpha(t)) * (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t));
}

/// Coefficient of x_0 in the posterior mean.
inline double posterior_x0_coef(const NoiseSchedule& s, int t) {
    check_step(s, t, 2, "posterior_mean");
    return std::sqrt(s.alpha_bar(t - 1)) * (1.0 - s.alpha(t)) / (1.0 - s.alpha_bar(t));
}

inline std::string schedule_csv(const NoiseSchedule& s) {
    std::string out = "t,alpha,alpha_bar,sigma2,k_prime\n";
    char buf[256];
    for (int t = 1; t <= s.T(); ++t) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,", t, s.alpha(t), s.alpha_bar(t), s.sigma2(t));
        out += buf;
        // k_prime is undefined at t = 1
        if (t >= 2) {
            std::snprintf(buf, sizeof buf, "%.17g", schedule_lipschitz(s, t));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace diffbound
