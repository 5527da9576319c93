#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace diffbound;
using namespace diffbound::testing;

namespace {

DiffusionModel small_model(int T, int hidden, std::uint64_t seed, Activation act = Activation::silu) {
    NetConfig nc;
    nc.hidden = hidden;
    nc.activation = act;
    Rng rng(seed);
    return {linear_schedule(T, 1e-3, 0.2), DenoiserNet::random(nc, rng), Box::cube(2, -1, 1)};
}

// Central finite differences over every parameter of a tiny net.
double max_gradient_error(Activation act) {
    NetConfig nc;
    nc.hidden = 2;
    nc.embed_dim = 4;
    nc.activation = act;
    Rng rng(17);
    DenoiserNet net = DenoiserNet::random(nc, rng);
    for (auto& l : net.layers()) l.b.setRandom();
    Batch x(2, 100), target(2, 100);
    std::vector<int> steps(100);
    OracleRng orng(18);
    for (int j = 0; j < 100; ++j) {
        x.col(j) = pt({orng.uniform(-1, 1), orng.uniform(-1, 1)});
        target.col(j) = pt({orng.normal(), orng.normal()});
        steps[static_cast<std::size_t>(j)] = 1 + j % 10;
    }
    const Eigen::MatrixXd input = net.make_input(x, steps);
    std::vector<Dense> grads;
    noise_prediction_loss(net, input, target, &grads);
    const double h = 1e-6;
    double worst = 0.0;
    auto check = [&](double& p, double analytic) {
        const double keep = p;
        p = keep + h;
        const double up = noise_prediction_loss(net, input, target);
        p = keep - h;
        const double down = noise_prediction_loss(net, input, target);
        p = keep;
        const double numeric = (up - down) / (2 * h);
        const double err = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-4});
        worst = std::max(worst, err);
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = net.layers()[l];
        for (Eigen::Index i = 0; i < layer.W.size(); ++i) check(layer.W.data()[i], grads[l].W.data()[i]);
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) check(layer.b.data()[i], grads[l].b.data()[i]);
    }
    return worst;
}

}  // namespace

TEST(Trainer, GradientMatchesFiniteDifferences) {
    for (Activation a : {Activation::silu, Activation::softplus, Activation::tanh})
        EXPECT_LE(max_gradient_error(a), 1e-5) << to_string(a);
}

TEST(Trainer, AdamMinimizesQuadratic) {
    std::vector<Dense> p{{Eigen::MatrixXd::Constant(2, 2, 3.0), Eigen::VectorXd::Constant(2, -2.0)}};
    Adam opt(p, 0.05, 0.9, 0.999, 1e-8);
    for (int i = 0; i < 2000; ++i) {
        std::vector<Dense> g{{2.0 * p[0].W, 2.0 * p[0].b}};
        opt.step(p, g);
    }
    EXPECT_LT(p[0].W.norm() + p[0].b.norm(), 1e-2);
}

TEST(Trainer, LossDecreasesAcrossSeeds) {
    for (std::uint64_t seed : {1, 2, 3}) {
        Rng drng(seed, "data");
        const auto data = uniform_square(2000, 2.0, drng);
        TrainConfig tc;
        tc.steps = 600;
        tc.batch_size = 128;
        tc.seed = seed;
        const auto res = train(small_model(20, 32, seed), data, tc);
        auto mean = [&](std::size_t a, std::size_t b) {
            return std::accumulate(res.loss_trace.begin() + a, res.loss_trace.begin() + b, 0.0) / (b - a);
        };
        EXPECT_LT(mean(500, 600), 0.9 * mean(0, 100)) << "seed " << seed;
    }
}

TEST(Trainer, BitwiseDeterministic) {
    Rng drng(4);
    const auto data = uniform_square(500, 2.0, drng);
    TrainConfig tc;
    tc.steps = 50;
    tc.batch_size = 64;
    const auto a = train(small_model(10, 16, 1), data, tc);
    const auto b = train(small_model(10, 16, 1), data, tc);
    EXPECT_TRUE(a.model == b.model);
    EXPECT_EQ(a.loss_trace, b.loss_trace);
    tc.seed = 2;
    const auto c = train(small_model(10, 16, 1), data, tc);
    EXPECT_FALSE(a.model == c.model);
}

TEST(Trainer, ScheduleAndBoxUntouched) {
    Rng drng(5);
    const auto data = uniform_square(200, 2.0, drng);
    TrainConfig tc;
    tc.steps = 20;
    const auto m0 = small_model(10, 8, 1);
    const auto res = train(m0, data, tc);
    EXPECT_TRUE(res.model.schedule == m0.schedule);
    EXPECT_TRUE(res.model.domain_box == m0.domain_box);
    EXPECT_FALSE(res.model.net == m0.net);
}

TEST(Trainer, RejectsBadInput) {
    TrainConfig tc;
    tc.steps = 1;
    const auto m = small_model(5, 8, 1);
    EXPECT_THROW(train(m, SampleSet::from_points({pt({2.0, 0.0})}), tc), std::invalid_argument);
    EXPECT_THROW(train(m, SampleSet::from_points({pt({0.0, 0.0, 0.0})}), tc), std::invalid_argument);
    EXPECT_THROW(train(m, SampleSet{}, tc), std::invalid_argument);
    tc.learning_rate = 0;
    EXPECT_THROW(train(m, SampleSet::from_points({pt({0.0, 0.0})}), tc), std::invalid_argument);
}

// Training on a single point: generated samples concentrate on it.
TEST(Trainer, OverfitsSinglePoint) {
    const Point target = pt({0.3, -0.2});
    std::vector<Point> pts(64, target);
    const auto data = SampleSet::from_points(pts);
    TrainConfig tc;
    tc.steps = 4000;
    tc.batch_size = 128;
    const auto res = train(small_model(20, 64, 6), data, tc);
    Rng rng(7);
    const Batch gen = generate(res.model, 1000, rng);
    int close = 0;
    for (Eigen::Index j = 0; j < gen.cols(); ++j) close += (gen.col(j) - target).norm() < 0.05;
    EXPECT_GE(close, 950);
}

TEST(Trainer, LossCsv) {
    EXPECT_EQ(loss_csv({0.5, 0.25}), "step,loss\n0,0.5\n1,0.25\n");
}
