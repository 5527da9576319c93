// Trains a small model on the uniform square for a few thousand steps and
// prints the bound terms at lambda = n next to the trivial diameter bound.

#include <cstdio>

#include "diffbound/diffbound.hpp"

int main() {
    using namespace diffbound;

    Rng data_rng(7, "demo.data");
    const SampleSet train_set = uniform_square(5000, 2.0, data_rng);

    NetConfig net;
    net.hidden = 64;
    Rng init_rng(7, "demo.init");
    DiffusionModel model{linear_schedule(50, 1e-4, 0.2), DenoiserNet::random(net, init_rng), Box::cube(2, -1.0, 1.0)};

    TrainConfig tc;
    tc.steps = 3000;
    tc.seed = 7;
    model = train(std::move(model), train_set, tc).model;

    Rng bound_rng(8, "demo.bound");
    const SampleSet s = uniform_square(1000, 2.0, bound_rng);
    BoundConfig bc;
    bc.expectation_draws = 100000;
    const BoundReport r = theorem_bound(model, s, static_cast<double>(s.size()), 0.05, bc);

    std::printf("recon %.4f  kl %.4f  pac %.4f  cross %.4g  sigma %.4f  total %.4f  (diameter %.4f)\n", r.term_recon,
                r.term_kl, r.term_pac, r.term_cross, r.term_sigma, r.total, r.Delta);
    return 0;
}
