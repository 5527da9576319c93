#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace diffbound;
using namespace diffbound::testing;

TEST(Transport, ExactMatchesBruteForce) {
    OracleRng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + trial % 7;
        const int dim = 1 + trial % 3;
        const auto a = random_points(n, dim, rng), b = random_points(n, dim, rng, -2, 2);
        EXPECT_NEAR(exact_w1(a, b).value, brute_force_w1(a, b), 1e-12) << "n=" << n;
    }
}

TEST(Transport, AssignmentIsAPermutation) {
    const std::vector<double> cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
    auto m = min_cost_assignment(cost, 3);
    std::sort(m.begin(), m.end());
    EXPECT_EQ(m, (std::vector<std::size_t>{0, 1, 2}));
    const auto best = min_cost_assignment(cost, 3);
    EXPECT_EQ(cost[0 * 3 + best[0]] + cost[1 * 3 + best[1]] + cost[2 * 3 + best[2]], 5.0);
}

TEST(Transport, Sandwich) {
    OracleRng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = trial % 2 ? 64 : 7;
        const auto a = random_points(n, 2, rng), b = random_points(n, 2, rng, -0.5, 1.5);
        const double lo = sliced_w1_lower(a, b, 64, static_cast<std::uint64_t>(trial)).value;
        const double ex = exact_w1(a, b).value;
        const double hi = trivial_coupling_upper(a, b).value;
        EXPECT_LE(lo, ex + 1e-12);
        EXPECT_LE(ex, hi + 1e-12);
    }
}

TEST(Transport, MetricAxioms) {
    OracleRng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_points(12, 2, rng), b = random_points(12, 2, rng), c = random_points(12, 2, rng, 0, 2);
        const double ab = exact_w1(a, b).value, ba = exact_w1(b, a).value;
        EXPECT_NEAR(ab, ba, 1e-12);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, exact_w1(a, c).value + exact_w1(c, b).value + 1e-12);
        auto shuffled = a;
        std::shuffle(shuffled.begin(), shuffled.end(), rng.eng);
        EXPECT_NEAR(exact_w1(a, shuffled).value, 0.0, 1e-15);
    }
}

TEST(Transport, TranslationAndScaling) {
    OracleRng rng(4);
    const auto a = random_points(20, 2, rng);
    auto b = a, c = a;
    for (auto& p : b) p += pt({0.3, -0.4});
    EXPECT_NEAR(exact_w1(a, b).value, 0.5, 1e-12);
    const auto d = random_points(20, 2, rng);
    auto a3 = a, d3 = d;
    for (auto& p : a3) p *= 3.0;
    for (auto& p : d3) p *= 3.0;
    EXPECT_NEAR(exact_w1(a3, d3).value, 3.0 * exact_w1(a, d).value, 1e-12);
    EXPECT_NEAR(sliced_w1_lower(a3, d3, 32, 5).value, 3.0 * sliced_w1_lower(a, d, 32, 5).value, 1e-12);
    EXPECT_NEAR(sliced_w1_lower(a, b, 256, 6).value, 0.5, 0.01);
}

// On the line the sliced estimator is exact (both projection signs give the same value).
TEST(Transport, OneDimensionalExactness) {
    OracleRng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_points(7, 1, rng), b = random_points(7, 1, rng, -1, 3);
        EXPECT_NEAR(sliced_w1_lower(a, b, 3, 1).value, brute_force_w1(a, b), 1e-12);
    }
}

TEST(Transport, UnequalSizesOnTheLine) {
    std::vector<double> xs{0.0, 1.0}, ys{0.0, 0.0, 1.0, 1.0};
    EXPECT_NEAR(w1_1d(xs, ys), 0.0, 1e-15);
    std::vector<double> p{0.0}, q{1.0, 3.0};
    EXPECT_NEAR(w1_1d(p, q), 2.0, 1e-15);
    std::vector<double> u{0.0, 2.0, 4.0}, v{1.0};
    EXPECT_NEAR(w1_1d(u, v), (1.0 + 1.0 + 3.0) / 3.0, 1e-15);
}

TEST(Transport, TrivialCouplingValue) {
    const std::vector<Point> a{pt({0.0, 0.0})}, b{pt({3.0, 4.0}), pt({0.0, 1.0})};
    EXPECT_NEAR(trivial_coupling_upper(a, b).value, 3.0, 1e-15);
    EXPECT_EQ(trivial_coupling_upper(a, b).kind, W1Kind::upper_bound);
}

TEST(Transport, KindsAndLimits) {
    OracleRng rng(6);
    const auto a = random_points(4, 2, rng), b = random_points(5, 2, rng);
    EXPECT_THROW(exact_w1(a, b), std::invalid_argument);
    const auto big = random_points(20, 2, rng);
    EXPECT_THROW(exact_w1(big, big, 10), std::invalid_argument);
    EXPECT_EQ(exact_w1(a, a).kind, W1Kind::exact);
    EXPECT_EQ(sliced_w1_lower(a, b, 4, 1).kind, W1Kind::lower_bound);
    EXPECT_EQ(to_json(sliced_w1_lower(a, b, 4, 1))["kind"], "lower_bound");
    EXPECT_THROW(sliced_w1_lower({}, b, 4, 1), std::invalid_argument);
    EXPECT_THROW(sliced_w1_lower(a, b, 0, 1), std::invalid_argument);
}

TEST(Transport, SlicedIndependentOfWorkers) {
    OracleRng rng(7);
    const auto a = random_points(300, 2, rng), b = random_points(300, 2, rng, 0, 1);
    EXPECT_EQ(sliced_w1_lower(a, b, 50, 9, 1).value, sliced_w1_lower(a, b, 50, 9, 5).value);
}

TEST(Transport, ExactAtSizeLimit) {
    OracleRng rng(8);
    const auto a = random_points(512, 2, rng), b = random_points(512, 2, rng);
    const double ex = exact_w1(a, b).value;
    EXPECT_LE(sliced_w1_lower(a, b, 64, 1).value, ex + 1e-12);
    EXPECT_LE(ex, trivial_coupling_upper(a, b).value);
}
