#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace diffbound;
using namespace diffbound::testing;

namespace {

struct Moments {
    Eigen::VectorXd mean, var;
};

template <class Draw>
Moments moments(std::size_t n, int dim, Draw draw) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(dim), s2 = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = draw();
        s += x;
        s2 += x.cwiseAbs2();
    }
    Moments m;
    m.mean = s / n;
    m.var = s2 / n - m.mean.cwiseAbs2();
    return m;
}

}  // namespace

TEST(Forward, MarginalMomentsFromOrigin) {
    const auto s = linear_schedule(20, 1e-3, 0.05);
    Rng rng(1);
    const int t = 10;
    const std::size_t n = 100000;
    const auto m = moments(n, 3, [&] { return sample_forward_marginal(s, Point::Zero(3), t, rng); });
    const double v = 1.0 - s.alpha_bar(t);
    for (int i = 0; i < 3; ++i) {
        EXPECT_LT(std::abs(m.mean[i]), 3.0 * std::sqrt(v / n));
        // SE of a Gaussian sample variance is v sqrt(2/n)
        EXPECT_LT(std::abs(m.var[i] - v), 3.0 * v * std::sqrt(2.0 / n));
    }
}

TEST(Forward, ZeroNoiseLimitReturnsInput) {
    // alpha_bar very close to 1: output within 1e-6 of x0 for every draw
    const NoiseSchedule s(std::vector<double>{1.0 - 1e-14});
    Rng rng(2);
    const Point x0 = pt({0.3, -0.7});
    for (int i = 0; i < 100; ++i) EXPECT_LT((sample_forward_marginal(s, x0, 1, rng) - x0).norm(), 1e-6);
}

TEST(Forward, MarginalAtLargeTApproachesPrior) {
    const auto s = linear_schedule(200, 1e-4, 0.2);
    ASSERT_LT(s.alpha_bar(200), 1e-8);
    Rng rng(3);
    OracleRng orng(3);
    const std::size_t n = 100000;
    const Point x0 = pt({1.0, -1.0});
    const auto a = moments(n, 2, [&] { return sample_forward_marginal(s, x0, 200, rng); });
    const auto b = moments(n, 2, [&] { return pt({orng.normal(), orng.normal()}); });
    for (int i = 0; i < 2; ++i) EXPECT_LT(std::abs(a.mean[i] - b.mean[i]), 3.0 * std::sqrt(2.0 / n));
}

// Stepwise forward sampling and the one-shot marginal share per-coordinate mean and variance.
TEST(Forward, StepwisePathMatchesMarginal) {
    const auto s = linear_schedule(12, 1e-3, 0.1);
    const Point x0 = pt({0.8, -0.4});
    const int t = 12;
    const std::size_t n = 100000;
    Rng r1(11), r2(12);
    const auto a = moments(n, 2, [&] { return sample_forward_path(s, x0, t, r1); });
    const auto b = moments(n, 2, [&] { return sample_forward_marginal(s, x0, t, r2); });
    const double v = 1.0 - s.alpha_bar(t);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(b.mean[i], std::sqrt(s.alpha_bar(t)) * x0[i], 3.0 * std::sqrt(v / n));
        EXPECT_LT(std::abs(a.mean[i] - b.mean[i]), 3.0 * std::sqrt(2.0 * v / n));
        EXPECT_LT(std::abs(a.var[i] - b.var[i]), 3.0 * v * std::sqrt(4.0 / n));
    }
}

TEST(Forward, PosteriorMeanValues) {
    const auto s = constant_schedule(3, 0.1);
    EXPECT_EQ(posterior_mean(s, Point::Zero(2), Point::Zero(2), 2).norm(), 0.0);
    EXPECT_NEAR(posterior_mean(s, pt({1.0}), pt({0.0}), 2)[0], std::sqrt(0.9) * 0.1 / 0.19, 1e-15);
    EXPECT_THROW(posterior_mean(s, pt({1.0}), pt({0.0}), 1), std::out_of_range);
    EXPECT_THROW(posterior_mean(s, pt({1.0}), pt({0.0, 1.0}), 2), std::invalid_argument);
}

// Affine in x_t with slope K'_t and in x_0 with slope sqrt(abar_{t-1})(1 - alpha_t)/(1 - abar_t).
TEST(Forward, PosteriorMeanSlopes) {
    OracleRng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(8);
        for (auto& x : a) x = rng.uniform(0.05, 0.999);
        const NoiseSchedule s(a);
        const int t = 2 + trial % 7;
        const auto pts = random_points(3, 3, rng, -5, 5);
        const double kx = (posterior_mean(s, pts[0], pts[2], t) - posterior_mean(s, pts[1], pts[2], t)).norm() /
                          (pts[0] - pts[1]).norm();
        EXPECT_NEAR(kx, schedule_lipschitz(s, t), 1e-12);
        const double k0 = (posterior_mean(s, pts[2], pts[0], t) - posterior_mean(s, pts[2], pts[1], t)).norm() /
                          (pts[0] - pts[1]).norm();
        EXPECT_NEAR(k0, std::sqrt(s.alpha_bar(t - 1)) * (1 - s.alpha(t)) / (1 - s.alpha_bar(t)), 1e-12);
    }
}

TEST(Forward, PriorKlExampleValue) {
    const NoiseSchedule s(std::vector<double>{0.5});
    const double expect = 0.5 * (2.0 * std::log(2.0) - 1.0 + 0.5);
    EXPECT_NEAR(prior_kl(s, pt({1.0, 0.0})), expect, 1e-15);
    EXPECT_NEAR(prior_kl(s, pt({1.0, 0.0})), 0.443147, 1e-6);
    EXPECT_NEAR(prior_kl(s, pt({1.0, 0.0})), diag_gaussian_kl({std::sqrt(0.5), 0.0}, {0.5, 0.5}), 1e-15);
}

TEST(Forward, PriorKlVanishesForLongSchedules) {
    const auto s = linear_schedule(400, 1e-4, 0.2);
    EXPECT_LT(prior_kl(s, pt({1.0, 1.0})), 1e-12);
}

TEST(Forward, PriorKlMatchesGenericOracle) {
    OracleRng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int T = 1 + static_cast<int>(rng.uniform(0, 30));
        std::vector<double> a(static_cast<std::size_t>(T));
        for (auto& x : a) x = rng.uniform(0.3, 0.9999);
        const NoiseSchedule s(a);
        const int D = 1 + trial % 5;
        const Point x0 = random_points(1, D, rng, -3, 3)[0];
        const double ab = s.alpha_bar(T);
        std::vector<double> mean(D), var(D, 1.0 - ab);
        for (int i = 0; i < D; ++i) mean[i] = std::sqrt(ab) * x0[i];
        const double kl = prior_kl(s, x0);
        EXPECT_GE(kl, 0.0);
        EXPECT_NEAR(kl, diag_gaussian_kl(mean, var), 1e-10);
    }
}
