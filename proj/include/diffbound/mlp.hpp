#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rng.hpp"

namespace diffbound {

enum class Activation { silu, softplus, tanh };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::silu: return "silu";
        case Activation::softplus: return "softplus";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

inline Activation parse_activation(const std::string& s) {
    if (s == "silu") return Activation::silu;
    if (s == "softplus") return Activation::softplus;
    if (s == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

struct NetConfig {
    int dim = 2;         // D, point dimension (input coords and output size)
    int hidden = 128;    // units per hidden layer
    int layers = 2;      // hidden layer count
    int embed_dim = 16;  // sinusoidal time embedding width, even
    Activation activation = Activation::silu;

    int input_dim() const { return dim + embed_dim; }
    bool operator==(const NetConfig&) const = default;
};

struct Dense {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
    bool operator==(const Dense& o) const { return W == o.W && b == o.b; }
};

/// Writes the sinusoidal embedding of step t into `out` (length embed_dim):
/// the first half holds sin(t f_k), the second cos(t f_k), f_k = 10000^(-k/half).
inline void time_embedding(int t, Eigen::Ref<Eigen::VectorXd> out) {
    const Eigen::Index half = out.size() / 2;
    for (Eigen::Index k = 0; k < half; ++k) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
        out[k] = std::sin(t * freq);
        out[k + half] = std::cos(t * freq);
    }
}

namespace detail {

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline void activate(Activation a, const Eigen::MatrixXd& z, Eigen::MatrixXd& y) {
    y.resizeLike(z);
    const Eigen::Index n = z.size();
    const double* zp = z.data();
    double* yp = y.data();
    switch (a) {
        case Activation::silu:
            for (Eigen::Index i = 0; i < n; ++i) yp[i] = zp[i] * sigmoid(zp[i]);
            break;
        case Activation::softplus:
            for (Eigen::Index i = 0; i < n; ++i)
                yp[i] = zp[i] > 0 ? zp[i] + std::log1p(std::exp(-zp[i])) : std::log1p(std::exp(zp[i]));
            break;
        case Activation::tanh:
            for (Eigen::Index i = 0; i < n; ++i) yp[i] = std::tanh(zp[i]);
            break;
    }
}

// dz = dy * act'(z), in place on dy
inline void activate_backward(Activation a, const Eigen::MatrixXd& z, const Eigen::MatrixXd& y, Eigen::MatrixXd& dy) {
    const Eigen::Index n = z.size();
    const double* zp = z.data();
    const double* yp = y.data();
    double* gp = dy.data();
    switch (a) {
        case Activation::silu:
            for (Eigen::Index i = 0; i < n; ++i) {
                const double s = sigmoid(zp[i]);
                gp[i] *= s * (1.0 + zp[i] * (1.0 - s));
            }
            break;
        case Activation::softplus:
            for (Eigen::Index i = 0; i < n; ++i) gp[i] *= sigmoid(zp[i]);
            break;
        case Activation::tanh:
            for (Eigen::Index i = 0; i < n; ++i) gp[i] *= 1.0 - yp[i] * yp[i];
            break;
    }
}

}  // namespace detail

/// Noise-prediction MLP eps_net(x, t): [x ; emb(t)] -> hidden layers -> D outputs.
class DenoiserNet {
public:
    /// Activations kept from a forward pass for the reverse sweep.
    struct Tape {
        Eigen::MatrixXd input;
        std::vector<Eigen::MatrixXd> pre;   // z_l
        std::vector<Eigen::MatrixXd> post;  // act(z_l), hidden layers only
    };

    DenoiserNet() = default;

    DenoiserNet(NetConfig cfg, std::vector<Dense> layers) : cfg_(cfg), layers_(std::move(layers)) { validate(); }

    /// Glorot-uniform weights, zero biases.
    static DenoiserNet random(const NetConfig& cfg, Rng& rng) {
        check_config(cfg);
        std::vector<Dense> layers;
        int in = cfg.input_dim();
        for (int l = 0; l <= cfg.layers; ++l) {
            const int out = l == cfg.layers ? cfg.dim : cfg.hidden;
            const double r = std::sqrt(6.0 / (in + out));
            Dense d{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
            for (int i = 0; i < out; ++i)
                for (int j = 0; j < in; ++j) d.W(i, j) = rng.uniform(-r, r);
            layers.push_back(std::move(d));
            in = out;
        }
        return DenoiserNet(cfg, std::move(layers));
    }

    static void check_config(const NetConfig& cfg) {
        if (cfg.dim < 1) throw std::invalid_argument("net: dim must be >= 1");
        if (cfg.hidden < 1 || cfg.layers < 0) throw std::invalid_argument("net: bad hidden shape");
        if (cfg.embed_dim < 2 || cfg.embed_dim % 2 != 0) throw std::invalid_argument("net: embed_dim must be even and >= 2");
    }

    const NetConfig& config() const { return cfg_; }
    const std::vector<Dense>& layers() const { return layers_; }
    std::vector<Dense>& layers() { return layers_; }

    /// Zeroes the output layer, making eps_net identically zero.
    void zero_output_layer() {
        layers_.back().W.setZero();
        layers_.back().b.setZero();
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
        return n;
    }

    /// Network input for columns of x, each paired with its own step.
    Eigen::MatrixXd make_input(const Eigen::MatrixXd& x, const std::vector<int>& steps) const {
        Eigen::MatrixXd in(cfg_.input_dim(), x.cols());
        in.topRows(cfg_.dim) = x;
        Eigen::VectorXd emb(cfg_.embed_dim);
        int last = -1;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const int t = steps[static_cast<std::size_t>(j)];
            if (t != last) {
                time_embedding(t, emb);
                last = t;
            }
            in.col(j).tail(cfg_.embed_dim) = emb;
        }
        return in;
    }

    Eigen::MatrixXd make_input(const Eigen::MatrixXd& x, int t) const {
        Eigen::MatrixXd in(cfg_.input_dim(), x.cols());
        in.topRows(cfg_.dim) = x;
        Eigen::VectorXd emb(cfg_.embed_dim);
        time_embedding(t, emb);
        in.bottomRows(cfg_.embed_dim) = emb.replicate(1, x.cols());
        return in;
    }

    /// eps_net(x, t) for a D x B batch sharing one step t.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x, int t) const {
        if (x.rows() != cfg_.dim) throw std::invalid_argument("net: input dimension mismatch");
        Eigen::MatrixXd a = make_input(x, t);
        Eigen::MatrixXd z, y;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            z.noalias() = layers_[l].W * a;
            z.colwise() += layers_[l].b;
            if (l + 1 == layers_.size()) return z;
            detail::activate(cfg_.activation, z, y);
            a.swap(y);
        }
        return a;
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Tape& tape) const {
        tape.input = input;
        tape.pre.resize(layers_.size());
        tape.post.resize(layers_.size() - 1);
        const Eigen::MatrixXd* a = &tape.input;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            tape.pre[l].noalias() = layers_[l].W * (*a);
            tape.pre[l].colwise() += layers_[l].b;
            if (l + 1 == layers_.size()) break;
            detail::activate(cfg_.activation, tape.pre[l], tape.post[l]);
            a = &tape.post[l];
        }
        return tape.pre.back();
    }

    /// Reverse sweep: parameter gradients given dLoss/dOutput.
    std::vector<Dense> backward(const Tape& tape, const Eigen::MatrixXd& d_out) const {
        std::vector<Dense> grads(layers_.size());
        Eigen::MatrixXd dz = d_out;
        for (std::size_t l = layers_.size(); l-- > 0;) {
            const Eigen::MatrixXd& a_prev = l == 0 ? tape.input : tape.post[l - 1];
            grads[l].W.noalias() = dz * a_prev.transpose();
            grads[l].b = dz.rowwise().sum();
            if (l == 0) break;
            Eigen::MatrixXd da = layers_[l].W.transpose() * dz;
            detail::activate_backward(cfg_.activation, tape.pre[l - 1], tape.post[l - 1], da);
            dz.swap(da);
        }
        return grads;
    }

    bool all_finite() const {
        for (const auto& l : layers_)
            if (!l.W.allFinite() || !l.b.allFinite()) return false;
        return true;
    }

    bool operator==(const DenoiserNet&) const = default;

private:
    void validate() const {
        check_config(cfg_);
        if (layers_.size() != static_cast<std::size_t>(cfg_.layers + 1))
            throw std::invalid_argument("net: layer count does not match config");
        Eigen::Index in = cfg_.input_dim();
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const Eigen::Index out = l + 1 == layers_.size() ? cfg_.dim : cfg_.hidden;
            if (layers_[l].W.rows() != out || layers_[l].W.cols() != in || layers_[l].b.size() != out)
                throw std::invalid_argument("net: layer " + std::to_string(l) + " has wrong shape");
            in = out;
        }
    }

    NetConfig cfg_;
    std::vector<Dense> layers_;
};

}  // namespace diffbound
