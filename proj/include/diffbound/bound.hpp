#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "denoiser.hpp"
#include "forward.hpp"
#include "stats.hpp"

namespace diffbound {

enum class KSource { schedule, probed };
enum class K1Rule { probed, one };
enum class BoundMode { monte_carlo, closed_form };

inline std::string to_string(KSource k) { return k == KSource::schedule ? "schedule" : "probed"; }
inline std::string to_string(K1Rule k) { return k == K1Rule::probed ? "probed" : "one"; }
inline std::string to_string(BoundMode m) { return m == BoundMode::monte_carlo ? "monte-carlo" : "closed-form"; }

inline KSource parse_k_source(const std::string& s) {
    if (s == "schedule") return KSource::schedule;
    if (s == "probed") return KSource::probed;
    throw std::invalid_argument("unknown k_source '" + s + "'");
}
inline K1Rule parse_k1_rule(const std::string& s) {
    if (s == "probed") return K1Rule::probed;
    if (s == "one") return K1Rule::one;
    throw std::invalid_argument("unknown k1 rule '" + s + "'");
}
inline BoundMode parse_bound_mode(const std::string& s) {
    if (s == "monte-carlo") return BoundMode::monte_carlo;
    if (s == "closed-form") return BoundMode::closed_form;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

/// Estimator budgets and seeds for the bound engine.
struct BoundConfig {
    KSource k_source = KSource::schedule;
    K1Rule k1 = K1Rule::probed;
    BoundMode mode = BoundMode::monte_carlo;
    std::size_t n_noise = 16;                  // x_T draws per sample point (reconstruction term)
    std::size_t n_chains = 1;                  // backward chains per x_T draw
    std::size_t expectation_draws = 1000000;   // draws for the two Gaussian-distance expectations
    ProbeConfig probe;
    std::uint64_t seed = 3;
    std::size_t workers = 1;
    std::size_t chunk = 64;                    // sample points per parallel task; fixed, never tied to workers
};

// ---- Gaussian distance expectations ----

struct GaussianPairDistance {
    double exact = 0.0;  // E|eps - eps'| = 2 Gamma((D+1)/2) / Gamma(D/2)
    double bound = 0.0;  // sqrt(2D)
};

inline GaussianPairDistance gaussian_pair_distance(int dim) {
    if (dim < 1) throw std::invalid_argument("gaussian_pair_distance: D must be >= 1");
    const double d = dim;
    return {2.0 * std::exp(std::lgamma((d + 1.0) / 2.0) - std::lgamma(d / 2.0)), std::sqrt(2.0 * d)};
}

/// Monte-Carlo E|eps - eps'| with `draws` pairs, split into fixed derived-stream tasks.
inline Estimate gaussian_pair_distance_mc(int dim, std::size_t draws, std::uint64_t seed, std::size_t workers = 1) {
    constexpr std::size_t kTask = 1 << 16;
    const std::size_t n_tasks = (draws + kTask - 1) / kTask;
    std::vector<double> values(draws);
    parallel_for(n_tasks, workers, [&](std::size_t k) {
        Rng rng(seed, "bound.eps_pair", k);
        const std::size_t end = std::min(draws, (k + 1) * kTask);
        Point e1(dim), e2(dim);
        for (std::size_t i = k * kTask; i < end; ++i) {
            fill_normal(e1, rng);
            fill_normal(e2, rng);
            values[i] = (e1 - e2).norm();
        }
    });
    return summarize(values);
}

// ---- reconstruction term ----

namespace detail {

// |x0 - reconstruct(x_T)| for n_noise forward draws x_T ~ q(x_T | x0) per point and
// n_chains backward chains per draw. Output is grouped per point.
inline std::vector<double> reconstruction_distances(const DiffusionModel& m, const std::vector<const Point*>& x0s,
                                                    std::size_t n_noise, std::size_t n_chains, Rng& rng) {
    const int T = m.T();
    const double ab = m.schedule.alpha_bar(T);
    const std::size_t per_point = n_noise * n_chains;
    const auto cols = static_cast<Eigen::Index>(x0s.size() * per_point);
    Batch xT(m.dim(), cols);
    Eigen::Index c = 0;
    for (const Point* x0 : x0s) {
        for (std::size_t r = 0; r < n_noise; ++r) {
            const Point x = std::sqrt(ab) * (*x0) + std::sqrt(1.0 - ab) * standard_normal(m.dim(), rng);
            for (std::size_t k = 0; k < n_chains; ++k) xT.col(c++) = x;
        }
    }
    const Batch out = reconstruct(m, std::move(xT), rng);
    std::vector<double> dist(static_cast<std::size_t>(cols));
    c = 0;
    for (const Point* x0 : x0s)
        for (std::size_t r = 0; r < per_point; ++r, ++c) dist[static_cast<std::size_t>(c)] = (*x0 - out.col(c)).norm();
    return dist;
}

}  // namespace detail

/// Monte-Carlo estimate of E_{q(x_T|x0)} loss(x_T, x0): mean |x0 - x_hat_0| over
/// n_noise forward draws and n_chains backward chains per draw.
inline Estimate recon_loss(const DiffusionModel& m, const Point& x0, std::size_t n_noise, std::size_t n_chains, Rng& rng) {
    if (n_noise < 1 || n_chains < 1) throw std::invalid_argument("recon_loss: budgets must be >= 1");
    const auto d = detail::reconstruction_distances(m, {&x0}, n_noise, n_chains, rng);
    return summarize(d);
}

/// Per-point estimates for a whole sample. Task k covers points [k*chunk, (k+1)*chunk)
/// and uses the stream derived from (seed, label, k).
template <class PerChunk>
std::vector<Estimate> per_point_estimates(const SampleSet& s, const BoundConfig& cfg, const char* label,
                                          const PerChunk& body) {
    const std::size_t n = s.size();
    const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk);
    const std::size_t n_tasks = (n + chunk - 1) / chunk;
    std::vector<Estimate> out(n);
    parallel_for(n_tasks, cfg.workers, [&](std::size_t k) {
        Rng rng(cfg.seed, label, k);
        const std::size_t begin = k * chunk, end = std::min(n, begin + chunk);
        std::vector<const Point*> pts;
        for (std::size_t i = begin; i < end; ++i) pts.push_back(&s.points[i]);
        const auto est = body(pts, rng);
        std::copy(est.begin(), est.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
    });
    return out;
}

/// Averages per-point estimates; SE combines the independent per-point errors.
inline Estimate average_estimates(const std::vector<Estimate>& xs) {
    std::vector<double> means(xs.size()), vars(xs.size());
    std::size_t count = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        means[i] = xs[i].mean;
        vars[i] = xs[i].std_error * xs[i].std_error;
        count += xs[i].count;
    }
    const double n = static_cast<double>(xs.size());
    return {pairwise_sum(means) / n, std::sqrt(pairwise_sum(vars)) / n, count};
}

inline Estimate recon_term(const DiffusionModel& m, const SampleSet& s, const BoundConfig& cfg) {
    if (cfg.n_noise < 1 || cfg.n_chains < 1) throw std::invalid_argument("recon_loss: budgets must be >= 1");
    const auto per_point = per_point_estimates(s, cfg, "bound.recon", [&](const std::vector<const Point*>& pts, Rng& rng) {
        const auto d = detail::reconstruction_distances(m, pts, cfg.n_noise, cfg.n_chains, rng);
        const std::size_t per = cfg.n_noise * cfg.n_chains;
        std::vector<Estimate> est;
        for (std::size_t i = 0; i < pts.size(); ++i)
            est.push_back(summarize(std::span<const double>(d).subspan(i * per, per)));
        return est;
    });
    return average_estimates(per_point);
}

// ---- cross-distance term ----

/// sqrt(abar_T |x0|^2 + (2 - abar_T) D): Jensen upper bound on E|x_T - y_T|.
inline double cross_distance_closed_form(double alpha_bar_T, const Point& x0) {
    return std::sqrt(alpha_bar_T * x0.squaredNorm() + (2.0 - alpha_bar_T) * static_cast<double>(x0.size()));
}

inline double cross_distance_closed_form(const NoiseSchedule& s, const Point& x0) {
    return cross_distance_closed_form(s.alpha_bar(s.T()), x0);
}

/// E_{x_T ~ q(.|x0)} E_{y_T ~ N(0,I)} |x_T - y_T|, by paired Monte Carlo or by the closed-form bound
/// (standard error zero).
inline Estimate cross_distance_term(const DiffusionModel& m, const Point& x0, BoundMode mode, std::size_t n_mc, Rng& rng) {
    if (mode == BoundMode::closed_form) return {cross_distance_closed_form(m.schedule, x0), 0.0, 0};
    if (n_mc < 1) throw std::invalid_argument("cross_distance_term: n_mc must be >= 1");
    const double ab = m.schedule.alpha_bar(m.T());
    std::vector<double> d(n_mc);
    const Point mean = std::sqrt(ab) * x0;
    const double sd = std::sqrt(1.0 - ab);
    Point e1(x0.size()), e2(x0.size());
    for (auto& v : d) {
        fill_normal(e1, rng);
        fill_normal(e2, rng);
        v = (mean + sd * e1 - e2).norm();
    }
    return summarize(d);
}

// ---- Lipschitz factors ----

struct KValues {
    std::vector<double> k;                // K^1..K^T
    std::vector<std::string> provenance;  // "schedule" | "probed" | "one"

    /// log prod_{i=1}^{upto} K^i
    double log_prefix(int upto) const {
        double s = 0.0;
        for (int i = 1; i <= upto; ++i) s += std::log(k[static_cast<std::size_t>(i - 1)]);
        return s;
    }
    double product() const { return std::exp(log_prefix(static_cast<int>(k.size()))); }
};

/// K^1..K^T for the bound. Schedule source uses K'_t for t >= 2; K^1 per `k1`.
inline KValues lipschitz_factors(const DiffusionModel& m, KSource source, K1Rule k1, const ProbeConfig& probe,
                                 std::uint64_t seed, std::size_t workers = 1) {
    const int T = m.T();
    KValues kv;
    kv.k.resize(static_cast<std::size_t>(T));
    kv.provenance.resize(static_cast<std::size_t>(T));
    parallel_for(static_cast<std::size_t>(T), workers, [&](std::size_t i) {
        const int t = static_cast<int>(i) + 1;
        if (t == 1 && k1 == K1Rule::one) {
            kv.k[i] = 1.0;
            kv.provenance[i] = "one";
        } else if (t >= 2 && source == KSource::schedule) {
            kv.k[i] = schedule_lipschitz(m.schedule, t);
            kv.provenance[i] = "schedule";
        } else {
            Rng rng(seed, "bound.probe", i);
            kv.k[i] = probe_lipschitz(m, t, probe, rng);
            kv.provenance[i] = "probed";
        }
    });
    return kv;
}

/// sum_{t=2}^T (prod_{i<t} K^i) sigma_t, prefix products in log space.
inline double sigma_weight(const NoiseSchedule& s, const KValues& kv) {
    std::vector<double> terms;
    double log_prefix = 0.0;
    for (int t = 2; t <= s.T(); ++t) {
        log_prefix += std::log(kv.k[static_cast<std::size_t>(t - 2)]);
        terms.push_back(std::exp(log_prefix) * s.sigma(t));
    }
    return pairwise_sum(terms);
}

// ---- report ----

struct BoundReport {
    double term_recon = 0, term_kl = 0, term_pac = 0, term_cross = 0, term_sigma = 0, total = 0;
    double std_error = 0;  // combined Monte-Carlo standard error of `total`
    double lambda = 0, delta = 0;
    std::size_t n = 0;
    int T = 0, D = 0;
    double Delta = 0;
    double sum_kl = 0;
    KValues k_values;
    KSource k_source = KSource::schedule;
    BoundMode mode = BoundMode::monte_carlo;
    nlohmann::json estimator_meta = nlohmann::json::object();
};

/// The lambda-independent pieces of the bound, computed once per sweep.
struct BoundTerms {
    Estimate recon;
    Estimate cross;  // average over the sample
    Estimate eps_pair;
    double k_product = 0;
    double sigma_weight = 0;
    double sum_kl = 0;
    double Delta = 0;
    std::size_t n = 0;
    int T = 0, D = 0;
    KValues k_values;
    BoundConfig cfg;
    nlohmann::json meta;
};

inline BoundTerms compute_bound_terms(const DiffusionModel& m, const SampleSet& s, const BoundConfig& cfg) {
    m.check();
    if (s.size() == 0) throw std::invalid_argument("bound: empty sample");
    if (s.dim != m.dim()) throw std::invalid_argument("bound: sample dimension does not match model");
    BoundTerms bt;
    bt.cfg = cfg;
    bt.n = s.size();
    bt.T = m.T();
    bt.D = m.dim();
    bt.Delta = domain_diameter(m.domain_box);

    std::vector<double> kls(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) kls[i] = prior_kl(m.schedule, s.points[i]);
    bt.sum_kl = pairwise_sum(kls);

    bt.recon = recon_term(m, s, cfg);

    const std::size_t per_point = std::max<std::size_t>(1, (cfg.expectation_draws + s.size() - 1) / s.size());
    bt.cross = average_estimates(per_point_estimates(s, cfg, "bound.cross", [&](const std::vector<const Point*>& pts, Rng& rng) {
        std::vector<Estimate> est;
        for (const Point* p : pts) est.push_back(cross_distance_term(m, *p, cfg.mode, per_point, rng));
        return est;
    }));

    const auto gpd = gaussian_pair_distance(bt.D);
    if (cfg.mode == BoundMode::monte_carlo)
        bt.eps_pair = gaussian_pair_distance_mc(bt.D, cfg.expectation_draws, derive_seed(cfg.seed, "bound.eps_pair.root"),
                                                cfg.workers);
    else
        bt.eps_pair = {gpd.bound, 0.0, 0};

    bt.k_values = lipschitz_factors(m, cfg.k_source, cfg.k1, cfg.probe, cfg.seed, cfg.workers);
    bt.k_product = bt.k_values.product();
    bt.sigma_weight = sigma_weight(m.schedule, bt.k_values);

    bt.meta = {{"seed", cfg.seed},
               {"n_noise", cfg.n_noise},
               {"n_chains", cfg.n_chains},
               {"expectation_draws", cfg.expectation_draws},
               {"cross_draws_per_point", cfg.mode == BoundMode::monte_carlo ? per_point : 0},
               {"probe_pairs", cfg.probe.n_pairs},
               {"probe_scales", cfg.probe.scales},
               {"k1_rule", to_string(cfg.k1)},
               {"chunk", cfg.chunk},
               {"recon_se", bt.recon.std_error},
               {"cross_mean", bt.cross.mean},
               {"cross_se", bt.cross.std_error},
               {"eps_pair_mean", bt.eps_pair.mean},
               {"eps_pair_se", bt.eps_pair.std_error},
               {"eps_pair_exact", gpd.exact},
               {"eps_pair_bound", gpd.bound},
               {"k_product", bt.k_product},
               {"sigma_weight", bt.sigma_weight},
               {"alpha_bar_T", m.schedule.alpha_bar(m.T())}};
    return bt;
}

/// Assembles the five terms for one (lambda, delta).
inline BoundReport assemble_report(const BoundTerms& bt, double lambda, double delta) {
    if (!(lambda > 0)) throw std::invalid_argument("bound: lambda must be > 0");
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("bound: delta must lie in (0,1)");
    BoundReport r;
    r.lambda = lambda;
    r.delta = delta;
    r.n = bt.n;
    r.T = bt.T;
    r.D = bt.D;
    r.Delta = bt.Delta;
    r.sum_kl = bt.sum_kl;
    r.k_values = bt.k_values;
    r.k_source = bt.cfg.k_source;
    r.mode = bt.cfg.mode;
    r.estimator_meta = bt.meta;
    const double n = static_cast<double>(bt.n);
    r.term_recon = bt.recon.mean;
    r.term_kl = (bt.sum_kl + std::log(1.0 / delta)) / lambda;
    r.term_pac = lambda * bt.Delta * bt.Delta / (8.0 * n);
    r.term_cross = bt.k_product * bt.cross.mean;
    r.term_sigma = bt.sigma_weight * bt.eps_pair.mean;
    r.total = r.term_recon + r.term_kl + r.term_pac + r.term_cross + r.term_sigma;
    r.std_error = std::sqrt(std::pow(bt.recon.std_error, 2) + std::pow(bt.k_product * bt.cross.std_error, 2) +
                            std::pow(bt.sigma_weight * bt.eps_pair.std_error, 2));
    return r;
}

/// The lambda minimizing the KL and diameter terms: sqrt(8 n [sum KL + log(1/delta)]) / Delta.
inline double optimal_lambda(double sum_kl, double delta, std::size_t n, double Delta) {
    return std::sqrt(8.0 * static_cast<double>(n) * (sum_kl + std::log(1.0 / delta))) / Delta;
}

inline std::vector<BoundReport> lambda_sweep(const DiffusionModel& m, const SampleSet& s, const std::vector<double>& lambdas,
                                             double delta, const BoundConfig& cfg) {
    if (lambdas.empty()) throw std::invalid_argument("lambda_sweep: empty lambda list");
    for (double l : lambdas)
        if (!(l > 0)) throw std::invalid_argument("bound: lambda must be > 0");
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("bound: delta must lie in (0,1)");
    const BoundTerms bt = compute_bound_terms(m, s, cfg);
    std::vector<BoundReport> out;
    for (double l : lambdas) out.push_back(assemble_report(bt, l, delta));
    return out;
}

inline BoundReport theorem_bound(const DiffusionModel& m, const SampleSet& s, double lambda, double delta,
                                 const BoundConfig& cfg) {
    return lambda_sweep(m, s, {lambda}, delta, cfg).front();
}

inline nlohmann::json to_json(const BoundReport& r) {
    return {{"lambda", r.lambda},
            {"delta", r.delta},
            {"n", r.n},
            {"T", r.T},
            {"D", r.D},
            {"Delta", r.Delta},
            {"term_recon", r.term_recon},
            {"term_kl", r.term_kl},
            {"term_pac", r.term_pac},
            {"term_cross", r.term_cross},
            {"term_sigma", r.term_sigma},
            {"total", r.total},
            {"std_error", r.std_error},
            {"sum_kl", r.sum_kl},
            {"lambda_star", optimal_lambda(r.sum_kl, r.delta, r.n, r.Delta)},
            {"k_source", to_string(r.k_source)},
            {"mode", to_string(r.mode)},
            {"k_values", {{"values", r.k_values.k}, {"provenance", r.k_values.provenance}}},
            {"estimator_meta", r.estimator_meta}};
}

inline std::string bound_csv(const std::vector<BoundReport>& rows) {
    std::string out = "lambda,delta,n,T,D,Delta,term_recon,term_kl,term_pac,term_cross,term_sigma,total,k_source,mode\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%s\n", r.lambda,
                      r.delta, r.n, r.T, r.D, r.Delta, r.term_recon, r.term_kl, r.term_pac, r.term_cross, r.term_sigma,
                      r.total, to_string(r.k_source).c_str(), to_string(r.mode).c_str());
        out += buf;
    }
    return out;
}

// ---- statistical checks of the contraction inequalities ----

struct Verdict {
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();  // min over trials of rhs + 3 se - lhs
    std::size_t trials = 0;
    std::size_t failures = 0;
    nlohmann::json meta = nlohmann::json::object();
};

struct HarnessConfig {
    std::size_t n_trials = 10000;
    std::size_t n_mc = 64;        // noise pairs per trial (single step)
    std::size_t n_chain_mc = 8;   // chain pairs per trial (full chain)
    ProbeConfig probe;
    std::uint64_t seed = 4;
    std::size_t workers = 1;
    std::size_t chunk = 256;      // trials per task
    double slack_se = 3.0;
    double rel_tol = 1e-9;        // floating-point allowance for deterministic comparisons
};

namespace detail {

inline void record(Verdict& v, double lhs, double se, double rhs, const HarnessConfig& cfg) {
    const double margin = rhs + cfg.slack_se * se - lhs;
    v.worst_margin = std::min(v.worst_margin, margin);
    ++v.trials;
    if (margin < -cfg.rel_tol * (1.0 + std::abs(rhs))) {
        ++v.failures;
        v.pass = false;
    }
}

inline void merge(Verdict& into, const Verdict& part) {
    into.pass = into.pass && part.pass;
    into.worst_margin = std::min(into.worst_margin, part.worst_margin);
    into.trials += part.trials;
    into.failures += part.failures;
}

}  // namespace detail

/// One-step check: E|x_{t-1} - y_{t-1}| <= K_hat |x_t - y_t| + sigma_t E|eps - eps'| (t >= 2),
/// or |decode(x) - decode(y)| <= K_hat |x - y| (t = 1), over random pairs in the domain box.
/// K_hat is probed; `k_override` replaces it when positive.
inline Verdict check_contraction(const DiffusionModel& m, int t, const HarnessConfig& cfg, double k_override = -1.0) {
    check_step(m.schedule, t, 1, "check_contraction");
    Rng probe_rng(cfg.seed, "check.probe", static_cast<std::uint64_t>(t));
    const double k_hat = k_override > 0 ? k_override : probe_lipschitz(m, t, cfg.probe, probe_rng);
    const double sigma = t >= 2 ? m.schedule.sigma(t) : 0.0;
    const double eps_pair = gaussian_pair_distance(m.dim()).exact;
    const std::size_t n_tasks = (cfg.n_trials + cfg.chunk - 1) / cfg.chunk;
    std::vector<Verdict> parts(n_tasks);
    parallel_for(n_tasks, cfg.workers, [&](std::size_t k) {
        Rng rng(cfg.seed, "check.contraction." + std::to_string(t), k);
        const std::size_t count = std::min(cfg.chunk, cfg.n_trials - k * cfg.chunk);
        Batch x(m.dim(), static_cast<Eigen::Index>(count)), y(x.rows(), x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            x.col(j) = m.domain_box.sample(rng);
            y.col(j) = m.domain_box.sample(rng);
        }
        const Batch gx = t == 1 ? decode(m, x) : g_mean(m, x, t);
        const Batch gy = t == 1 ? decode(m, y) : g_mean(m, y, t);
        std::vector<double> d(t == 1 ? 1 : cfg.n_mc);
        Point e1(m.dim()), e2(m.dim()), diff(m.dim());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            diff = gx.col(j) - gy.col(j);
            if (t == 1) {
                d[0] = diff.norm();
            } else {
                for (auto& v : d) {
                    fill_normal(e1, rng);
                    fill_normal(e2, rng);
                    v = (diff + sigma * (e1 - e2)).norm();
                }
            }
            const Estimate lhs = summarize(d);
            const double rhs = k_hat * (x.col(j) - y.col(j)).norm() + sigma * eps_pair;
            detail::record(parts[k], lhs.mean, lhs.std_error, rhs, cfg);
        }
    });
    Verdict v;
    v.trials = 0;
    for (const auto& p : parts) detail::merge(v, p);
    v.meta = {{"t", t}, {"k_hat", k_hat}, {"sigma", sigma}, {"n_mc", t == 1 ? 1 : cfg.n_mc}, {"seed", cfg.seed}};
    return v;
}

/// Full-chain check: E|x_hat_0 - y_hat_0| <= (prod K_hat^t) |x_T - y_T| + (sum_t prod_{i<t} K_hat^i sigma_t) E|eps - eps'|
/// with independent chains from random endpoint pairs in the domain box.
/// `k_override`, when non-empty, replaces the probed K_hat^1..K_hat^T.
inline Verdict check_iterated_contraction(const DiffusionModel& m, const HarnessConfig& cfg,
                                          std::vector<double> k_override = {}) {
    KValues kv;
    if (k_override.empty()) {
        kv = lipschitz_factors(m, KSource::probed, K1Rule::probed, cfg.probe, derive_seed(cfg.seed, "check.iterated.probe"),
                               cfg.workers);
    } else {
        if (k_override.size() != static_cast<std::size_t>(m.T())) throw std::invalid_argument("k_override needs T values");
        kv.k = std::move(k_override);
        kv.provenance.assign(kv.k.size(), "override");
    }
    const double k_prod = kv.product();
    const double weight = sigma_weight(m.schedule, kv);
    const double eps_pair = gaussian_pair_distance(m.dim()).exact;
    const std::size_t reps = std::max<std::size_t>(1, cfg.n_chain_mc);
    const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk);
    const std::size_t n_tasks = (cfg.n_trials + chunk - 1) / chunk;
    std::vector<Verdict> parts(n_tasks);
    parallel_for(n_tasks, cfg.workers, [&](std::size_t k) {
        Rng rng(cfg.seed, "check.iterated", k);
        const std::size_t count = std::min(chunk, cfg.n_trials - k * chunk);
        std::vector<Point> xs, ys;
        Batch bx(m.dim(), static_cast<Eigen::Index>(count * reps)), by(bx.rows(), bx.cols());
        for (std::size_t j = 0; j < count; ++j) {
            xs.push_back(m.domain_box.sample(rng));
            ys.push_back(m.domain_box.sample(rng));
            for (std::size_t r = 0; r < reps; ++r) {
                bx.col(static_cast<Eigen::Index>(j * reps + r)) = xs.back();
                by.col(static_cast<Eigen::Index>(j * reps + r)) = ys.back();
            }
        }
        const Batch ox = reconstruct(m, std::move(bx), rng);
        const Batch oy = reconstruct(m, std::move(by), rng);
        std::vector<double> d(reps);
        for (std::size_t j = 0; j < count; ++j) {
            for (std::size_t r = 0; r < reps; ++r) {
                const auto c = static_cast<Eigen::Index>(j * reps + r);
                d[r] = (ox.col(c) - oy.col(c)).norm();
            }
            const Estimate lhs = summarize(d);
            const double rhs = k_prod * (xs[j] - ys[j]).norm() + weight * eps_pair;
            detail::record(parts[k], lhs.mean, lhs.std_error, rhs, cfg);
        }
    });
    Verdict v;
    for (const auto& p : parts) detail::merge(v, p);
    v.meta = {{"k_values", kv.k}, {"k_product", k_prod}, {"sigma_weight", weight}, {"n_chain_mc", reps}, {"seed", cfg.seed}};
    return v;
}

inline nlohmann::json to_json(const Verdict& v) {
    return {{"pass", v.pass}, {"worst_margin", v.worst_margin}, {"trials", v.trials}, {"failures", v.failures}, {"meta", v.meta}};
}

}  // namespace diffbound
