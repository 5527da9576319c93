#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "data.hpp"
#include "denoiser.hpp"

namespace diffbound {

struct TrainConfig {
    std::size_t n_train = 50000;
    std::size_t batch_size = 256;
    std::size_t steps = 20000;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;

    void check() const {
        if (n_train < 1 || batch_size < 1 || steps < 1) throw std::invalid_argument("train: counts must be positive");
        if (!(learning_rate > 0)) throw std::invalid_argument("train: learning_rate must be > 0");
        if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("train: betas must lie in [0,1)");
    }
};

/// Adaptive-moment optimizer over a list of dense layers.
class Adam {
public:
    Adam(const std::vector<Dense>& params, double lr, double beta1, double beta2, double eps)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& p : params) {
            m_.push_back({Eigen::MatrixXd::Zero(p.W.rows(), p.W.cols()), Eigen::VectorXd::Zero(p.b.size())});
            v_.push_back(m_.back());
        }
    }

    void step(std::vector<Dense>& params, const std::vector<Dense>& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t l = 0; l < params.size(); ++l) {
            update(params[l].W, grads[l].W, m_[l].W, v_[l].W, c1, c2);
            update(params[l].b, grads[l].b, m_[l].b, v_[l].b, c1, c2);
        }
    }

private:
    template <class P, class G>
    void update(P& p, const G& g, P& m, P& v, double c1, double c2) const {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
        p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    }

    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Dense> m_, v_;
};

/// Mean squared error between eps_net(input) and `target` over all entries.
/// Fills `grads` with its parameter gradient when non-null.
inline double noise_prediction_loss(const DenoiserNet& net, const Eigen::MatrixXd& input, const Batch& target,
                                    std::vector<Dense>* grads = nullptr) {
    DenoiserNet::Tape tape;
    const Eigen::MatrixXd out = net.forward(input, tape);
    const Eigen::MatrixXd diff = out - target;
    const double denom = static_cast<double>(diff.size());
    const double loss = diff.squaredNorm() / denom;
    if (grads) *grads = net.backward(tape, (2.0 / denom) * diff);
    return loss;
}

/// One training minibatch: (x_0, t, eps) resampled per element, t uniform on {1..T}.
struct Minibatch {
    Eigen::MatrixXd input;
    Batch noise;
};

inline Minibatch draw_minibatch(const DiffusionModel& m, const SampleSet& data, std::size_t batch, Rng& rng) {
    const auto B = static_cast<Eigen::Index>(batch);
    Batch x(m.dim(), B);
    Batch eps(m.dim(), B);
    std::vector<int> steps(batch);
    for (Eigen::Index j = 0; j < B; ++j) {
        const Point& x0 = data.points[rng.index(data.size())];
        const int t = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(m.T())));
        steps[static_cast<std::size_t>(j)] = t;
        for (Eigen::Index i = 0; i < m.dim(); ++i) eps(i, j) = rng.normal();
        const double ab = m.schedule.alpha_bar(t);
        x.col(j) = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps.col(j);
    }
    return {m.net.make_input(x, steps), std::move(eps)};
}

struct TrainResult {
    DiffusionModel model;
    std::vector<double> loss_trace;
};

inline TrainResult train(DiffusionModel model, const SampleSet& data, const TrainConfig& cfg,
                         const std::function<void(std::size_t, double)>& progress = {}) {
    cfg.check();
    model.check();
    if (data.size() == 0) throw std::invalid_argument("train: empty data set");
    if (data.dim != model.dim()) throw std::invalid_argument("train: data dimension does not match model");
    for (const auto& p : data.points)
        if (!model.domain_box.contains(p)) throw std::invalid_argument("train: data point outside the domain box");

    Rng rng(cfg.seed, "train.minibatch");
    Adam opt(model.net.layers(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    TrainResult result;
    result.loss_trace.reserve(cfg.steps);
    std::vector<Dense> grads;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const Minibatch mb = draw_minibatch(model, data, cfg.batch_size, rng);
        const double loss = noise_prediction_loss(model.net, mb.input, mb.noise, &grads);
        if (!std::isfinite(loss))
            throw std::runtime_error("train: loss became non-finite at step " + std::to_string(step) +
                                     " (learning rate too high?)");
        opt.step(model.net.layers(), grads);
        result.loss_trace.push_back(loss);
        if (progress) progress(step, loss);
    }
    result.model = std::move(model);
    return result;
}

inline std::string loss_csv(const std::vector<double>& trace) {
    std::string out = "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
        out += buf;
    }
    return out;
}

}  // namespace diffbound
