#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace diffbound;
using namespace diffbound::testing;

TEST(Denoiser, NullNetworkMeanIsScaling) {
    const auto m = null_model(constant_schedule(3, 0.1), Box::cube(2, -1, 1));
    const Point x = pt({0.5, -0.25});
    for (int t = 1; t <= 3; ++t) EXPECT_LT((g_mean(m, x, t) - x / std::sqrt(0.9)).norm(), 1e-15);
}

TEST(Denoiser, DecodeClampsIntoBox) {
    const auto m = null_model(constant_schedule(2, 0.1), Box::cube(2, -1, 1));
    const Point out = decode(m, pt({3.0 * std::sqrt(0.9), 0.0}));
    EXPECT_NEAR(out[0], 1.0, 1e-15);
    EXPECT_EQ(out[1], 0.0);
    const Point inside = decode(m, pt({0.2, -0.3}));
    EXPECT_LT((inside - pt({0.2, -0.3}) / std::sqrt(0.9)).norm(), 1e-15);
}

TEST(Denoiser, RejectsBadSteps) {
    const auto m = null_model(constant_schedule(3, 0.1), Box::cube(2, -1, 1));
    Rng rng(1);
    EXPECT_THROW(g_mean(m, pt({0, 0}), 0), std::out_of_range);
    EXPECT_THROW(g_mean(m, pt({0, 0}), 4), std::out_of_range);
    EXPECT_THROW(backward_step(m, pt({0, 0}), 1, rng), std::out_of_range);
}

// With eps_net = 0 the chain is x <- x / sqrt(alpha_t) + sigma_t eps; rebuild it by hand.
TEST(Denoiser, ReconstructTelescopes) {
    const auto s = linear_schedule(6, 1e-3, 0.2);
    const auto m = null_model(s, Box::cube(2, -50, 50));
    const Point xT = pt({0.3, 0.1});
    Rng a(7), b(7);
    const Point got = reconstruct(m, xT, a);
    Point x = xT;
    for (int t = 6; t >= 2; --t) {
        const Point e = standard_normal(2, b);
        x = x / std::sqrt(s.alpha(t)) + s.sigma(t) * e;
    }
    x /= std::sqrt(s.alpha(1));
    EXPECT_LT((got - x).norm(), 1e-12);
}

TEST(Denoiser, GenerateIsSeededAndInsideBox) {
    const auto s = linear_schedule(10, 1e-3, 0.2);
    Rng r0(3);
    NetConfig nc;
    nc.hidden = 16;
    DiffusionModel m{s, DenoiserNet::random(nc, r0), Box::cube(2, -1, 1)};
    Rng a(11), b(11), c(12);
    const Batch x = generate(m, 200, a);
    const Batch y = generate(m, 200, b);
    const Batch z = generate(m, 200, c);
    EXPECT_EQ(x, y);
    EXPECT_NE(x, z);
    for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_TRUE(m.domain_box.contains(x.col(j)));
}

TEST(Denoiser, BatchAndSingleAgree) {
    Rng r0(4);
    NetConfig nc;
    nc.hidden = 16;
    const DiffusionModel m{linear_schedule(5, 1e-3, 0.2), DenoiserNet::random(nc, r0), Box::cube(2, -1, 1)};
    Batch xs(2, 3);
    xs << 0.1, -0.4, 0.9, 0.2, 0.0, -0.7;
    const Batch g = g_mean(m, xs, 3);
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_LT((g.col(j) - g_mean(m, Point(xs.col(j)), 3)).norm(), 1e-14);
}

TEST(Denoiser, LipschitzOfAffineMapIsExact) {
    const auto s = linear_schedule(8, 1e-3, 0.2);
    const auto m = null_model(s, Box::cube(2, -1, 1));
    for (int t = 2; t <= 8; ++t)
        for (double scale : {1e-2, 1e-1, 1.0}) {
            Rng rng(5, "probe", static_cast<std::uint64_t>(t));
            EXPECT_NEAR(estimate_lipschitz(m, t, 256, scale, rng), 1.0 / std::sqrt(s.alpha(t)), 1e-10);
        }
}

TEST(Denoiser, DecodeLipschitzNeverAboveAffineSlope) {
    const auto s = linear_schedule(4, 0.05, 0.2);
    const auto m = null_model(s, Box::cube(2, -1, 1));
    Rng rng(6);
    const double k = probe_lipschitz(m, 1, ProbeConfig{}, rng);
    EXPECT_LE(k, 1.0 / std::sqrt(s.alpha(1)) * (1 + 1e-12));
    EXPECT_GT(k, 1.0);
}

TEST(Denoiser, ProbeOnIdentityIsOne) {
    Rng rng(8);
    const double k = probe_lipschitz_of([](const Batch& x) { return x; }, Box::cube(3, 0, 1), 500, 0.3, rng);
    EXPECT_NEAR(k, 1.0, 1e-12);
}

// A probe never exceeds the true constant: 2-Lipschitz sine map.
TEST(Denoiser, ProbeIsALowerEstimate) {
    Rng rng(9);
    auto f = [](const Batch& x) { return Batch((2.0 * x.array()).sin()); };
    for (double scale : {1e-3, 1e-1, 1.0}) {
        const double k = probe_lipschitz_of(f, Box::cube(2, -1, 1), 2000, scale, rng);
        EXPECT_LE(k, 2.0 + 1e-12);
        if (scale < 1e-2) EXPECT_GT(k, 1.9);
    }
}

TEST(Denoiser, ProbeRejectsBadArguments) {
    const auto m = null_model(constant_schedule(2, 0.1), Box::cube(2, -1, 1));
    Rng rng(1);
    EXPECT_THROW(estimate_lipschitz(m, 2, 0, 0.1, rng), std::invalid_argument);
    EXPECT_THROW(estimate_lipschitz(m, 2, 10, 0.0, rng), std::invalid_argument);
}
