#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace diffbound;
using namespace diffbound::testing;

TEST(Schedule, SingleStep) {
    const auto s = linear_schedule(1, 0.1, 0.1);
    EXPECT_EQ(s.T(), 1);
    EXPECT_DOUBLE_EQ(s.alpha(1), 0.9);
    EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
}

TEST(Schedule, ConstantBetaProduct) {
    const auto s = linear_schedule(3, 0.1, 0.1);
    EXPECT_NEAR(s.alpha_bar(3), 0.729, 1e-15);
}

TEST(Schedule, LinearEndpoints) {
    const auto s = linear_schedule(50, 1e-4, 0.2);
    EXPECT_DOUBLE_EQ(s.alpha(1), 1.0 - 1e-4);
    EXPECT_DOUBLE_EQ(s.alpha(50), 0.8);
}

TEST(Schedule, RejectsBadInput) {
    EXPECT_THROW(linear_schedule(0, 0.1, 0.2), std::invalid_argument);
    EXPECT_THROW(linear_schedule(5, 0.0, 0.2), std::invalid_argument);
    EXPECT_THROW(linear_schedule(5, 0.1, 1.0), std::invalid_argument);
    EXPECT_THROW(linear_schedule(5, 0.3, 0.2), std::invalid_argument);
    EXPECT_THROW(NoiseSchedule(std::vector<double>{0.5, 1.0}), std::invalid_argument);
}

TEST(Schedule, PosteriorVarianceValue) {
    const auto s = constant_schedule(4, 0.1);
    EXPECT_NEAR(posterior_variance(s, 2), 0.01 / 0.19, 1e-15);
    EXPECT_NEAR(s.sigma2(2), 0.01 / 0.19, 1e-15);
    EXPECT_THROW(posterior_variance(s, 1), std::out_of_range);
    EXPECT_THROW(posterior_variance(s, 5), std::out_of_range);
}

TEST(Schedule, FirstSigmaIsInertZero) {
    EXPECT_EQ(linear_schedule(10, 1e-4, 0.2).sigma2(1), 0.0);
    const auto b = linear_schedule(10, 1e-4, 0.2, SigmaRule::beta);
    EXPECT_EQ(b.sigma2(1), 1.0 - b.alpha(1));
    EXPECT_NEAR(b.sigma2(1), 1e-4, 1e-15);
    EXPECT_NEAR(b.sigma2(10), 0.2, 1e-15);
}

TEST(Schedule, PosteriorVarianceVanishesWithBeta) {
    double prev = 1.0;
    for (double beta : {1e-2, 1e-4, 1e-6, 1e-8}) {
        std::vector<double> a{0.9, 1.0 - beta};
        const double v = posterior_variance(NoiseSchedule(a), 2);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-8);
}

// 0 <= sigma_t^2 < 1 - alpha_t over a grid of two-step schedules.
TEST(Schedule, PosteriorVarianceBelowBetaOnGrid) {
    for (int i = 1; i < 40; ++i)
        for (int j = 1; j < 40; ++j) {
            const NoiseSchedule s(std::vector<double>{i / 40.0, j / 40.0});
            const double v = posterior_variance(s, 2);
            EXPECT_GE(v, 0.0);
            EXPECT_LT(v, 1.0 - s.alpha(2));
        }
}

TEST(Schedule, LipschitzValue) {
    const auto s = constant_schedule(3, 0.1);
    EXPECT_NEAR(schedule_lipschitz(s, 2), std::sqrt(0.9) * 0.1 / 0.19, 1e-15);
    EXPECT_NEAR(schedule_lipschitz(s, 2), 0.4993, 1e-4);
    EXPECT_THROW(schedule_lipschitz(s, 1), std::out_of_range);
}

TEST(Schedule, LipschitzTendsToOneAsBetaVanishes) {
    double prev = 0.0;
    for (double beta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
        const double k = schedule_lipschitz(NoiseSchedule(std::vector<double>{0.5, 1.0 - beta}), 2);
        EXPECT_GT(k, prev);
        EXPECT_LT(k, 1.0);
        prev = k;
    }
    EXPECT_GT(prev, 1.0 - 1e-5);
}

// Property: random schedules keep alpha_bar strictly decreasing and K' < 1.
TEST(Schedule, RandomSchedulesProperties) {
    OracleRng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const int T = 2 + static_cast<int>(rng.uniform(0, 60));
        std::vector<double> a(static_cast<std::size_t>(T));
        for (auto& x : a) x = rng.uniform(1e-3, 1.0 - 1e-6);
        const NoiseSchedule s(a);
        double prod = 1.0;
        for (int t = 1; t <= T; ++t) {
            prod *= a[static_cast<std::size_t>(t - 1)];
            EXPECT_EQ(s.alpha_bar(t), prod);
            if (t >= 2) {
                EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
                EXPECT_LT(schedule_lipschitz(s, t), 1.0);
            }
        }
    }
}

TEST(Schedule, CosineAndConstantAreValid) {
    const auto c = cosine_schedule(100);
    for (int t = 2; t <= c.T(); ++t) EXPECT_LT(c.alpha_bar(t), c.alpha_bar(t - 1));
    EXPECT_LT(c.alpha_bar(100), 1e-3);
    EXPECT_THROW(constant_schedule(3, 1.5), std::invalid_argument);
}

TEST(Schedule, CsvDump) {
    const std::string csv = schedule_csv(constant_schedule(2, 0.1));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,alpha,alpha_bar,sigma2,k_prime");
    EXPECT_NE(csv.find("\n1,0.90000000000000002,0.90000000000000002,0,\n"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
