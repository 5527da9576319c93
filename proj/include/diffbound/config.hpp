#pragma once

// Experiment configuration: flat `key = value` text, one entry per line,
// '#' starts a comment. Unknown keys and malformed values are rejected with
// the offending line number. Schema version is `config.version` (currently 1).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bound.hpp"
#include "mlp.hpp"
#include "rng.hpp"
#include "trainer.hpp"

namespace diffbound {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    int version = 1;

    std::string generator = "uniform_square";
    double side = 2.0;     // uniform_square
    double radius = 0.8;   // uniform_circle, inside [-side/2, side/2]^2

    std::string schedule_kind = "linear";
    int T = 50;
    double beta_start = 1e-4;
    double beta_end = 0.2;
    std::string sigma_rule = "posterior";

    NetConfig net;
    TrainConfig train;

    std::size_t bound_n = 5000;
    std::vector<double> lambda_factors{0.1, 0.2, 0.5, 1.0, 2.0, 10.0};  // lambda = factor * n
    double delta = 0.05;
    BoundConfig bound;

    std::size_t validate_n = 512;
    std::size_t validate_projections = 128;
    std::size_t validate_repeats = 5;
    HarnessConfig harness;

    std::size_t sample_n = 2000;

    std::uint64_t seed_data = 1;
    std::uint64_t seed_train = 2;
    std::uint64_t seed_bound = 3;
    std::uint64_t seed_validate = 4;
    std::size_t workers = 1;

    std::vector<double> lambdas() const {
        std::vector<double> out;
        for (double f : lambda_factors) out.push_back(f * static_cast<double>(bound_n));
        return out;
    }

    BoundConfig bound_config() const {
        BoundConfig b = bound;
        b.seed = seed_bound;
        b.workers = workers;
        return b;
    }

    HarnessConfig harness_config() const {
        HarnessConfig h = harness;
        h.probe = bound.probe;
        h.seed = derive_seed(seed_validate, "validate.harness");
        h.workers = workers;
        return h;
    }

    TrainConfig train_config() const {
        TrainConfig t = train;
        t.seed = seed_train;
        return t;
    }

    /// Checks every downstream precondition; throws ConfigError.
    void validate() const;

    /// Canonical text form: every key except `workers`, sorted, one per line.
    /// Results never depend on the worker count, so it stays out of hashes and manifests.
    std::string to_text() const;

    std::string hash() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_text())));
        return buf;
    }

    void set(const std::string& key, const std::string& value);

    static ExperimentConfig parse(const std::string& text, const std::string& origin = "config");
    static ExperimentConfig load(const std::string& path);

    /// Applies `key=value` overrides in order.
    void apply_overrides(const std::vector<std::string>& kvs);
};

namespace detail {

inline std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline double to_double(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("not a number");
    return d;
}

inline std::uint64_t to_u64(const std::string& v) {
    if (v.empty() || v[0] == '-') throw std::invalid_argument("not a nonnegative integer");
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("not an integer");
    return x;
}

inline int to_int(const std::string& v) {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument("not an integer");
    return x;
}

inline std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

inline std::string fmt(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

inline std::string fmt(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
    return out;
}

struct KeySpec {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class F>
KeySpec u64_key(F field) {
    return {[field](ExperimentConfig& c, const std::string& v) { field(c) = to_u64(v); },
            [field](const ExperimentConfig& c) { return std::to_string(field(const_cast<ExperimentConfig&>(c))); }};
}
template <class F>
KeySpec size_key(F field) {
    return {[field](ExperimentConfig& c, const std::string& v) { field(c) = static_cast<std::size_t>(to_u64(v)); },
            [field](const ExperimentConfig& c) { return std::to_string(field(const_cast<ExperimentConfig&>(c))); }};
}
template <class F>
KeySpec int_key(F field) {
    return {[field](ExperimentConfig& c, const std::string& v) { field(c) = to_int(v); },
            [field](const ExperimentConfig& c) { return std::to_string(field(const_cast<ExperimentConfig&>(c))); }};
}
template <class F>
KeySpec double_key(F field) {
    return {[field](ExperimentConfig& c, const std::string& v) { field(c) = to_double(v); },
            [field](const ExperimentConfig& c) { return fmt(field(const_cast<ExperimentConfig&>(c))); }};
}
template <class F>
KeySpec list_key(F field) {
    return {[field](ExperimentConfig& c, const std::string& v) { field(c) = to_doubles(v); },
            [field](const ExperimentConfig& c) { return fmt(field(const_cast<ExperimentConfig&>(c))); }};
}
template <class F>
KeySpec string_key(F field) {
    return {[field](ExperimentConfig& c, const std::string& v) { field(c) = v; },
            [field](const ExperimentConfig& c) { return field(const_cast<ExperimentConfig&>(c)); }};
}
template <class F, class Parse, class Show>
KeySpec enum_key(F field, Parse parse, Show show) {
    return {[field, parse](ExperimentConfig& c, const std::string& v) { field(c) = parse(v); },
            [field, show](const ExperimentConfig& c) { return show(field(const_cast<ExperimentConfig&>(c))); }};
}

#define DIFFBOUND_FIELD(expr) [](ExperimentConfig& c) -> auto& { return c.expr; }

inline const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = {
        {"config.version", int_key(DIFFBOUND_FIELD(version))},
        {"data.generator", string_key(DIFFBOUND_FIELD(generator))},
        {"data.side", double_key(DIFFBOUND_FIELD(side))},
        {"data.radius", double_key(DIFFBOUND_FIELD(radius))},
        {"data.n_train", size_key(DIFFBOUND_FIELD(train.n_train))},
        {"schedule.kind", string_key(DIFFBOUND_FIELD(schedule_kind))},
        {"schedule.T", int_key(DIFFBOUND_FIELD(T))},
        {"schedule.beta_start", double_key(DIFFBOUND_FIELD(beta_start))},
        {"schedule.beta_end", double_key(DIFFBOUND_FIELD(beta_end))},
        {"schedule.sigma", string_key(DIFFBOUND_FIELD(sigma_rule))},
        {"net.hidden", int_key(DIFFBOUND_FIELD(net.hidden))},
        {"net.layers", int_key(DIFFBOUND_FIELD(net.layers))},
        {"net.embed_dim", int_key(DIFFBOUND_FIELD(net.embed_dim))},
        {"net.activation", enum_key(DIFFBOUND_FIELD(net.activation), parse_activation,
                                    [](Activation a) { return to_string(a); })},
        {"train.batch_size", size_key(DIFFBOUND_FIELD(train.batch_size))},
        {"train.steps", size_key(DIFFBOUND_FIELD(train.steps))},
        {"train.learning_rate", double_key(DIFFBOUND_FIELD(train.learning_rate))},
        {"train.beta1", double_key(DIFFBOUND_FIELD(train.beta1))},
        {"train.beta2", double_key(DIFFBOUND_FIELD(train.beta2))},
        {"train.epsilon", double_key(DIFFBOUND_FIELD(train.epsilon))},
        {"bound.n", size_key(DIFFBOUND_FIELD(bound_n))},
        {"bound.lambda_factors", list_key(DIFFBOUND_FIELD(lambda_factors))},
        {"bound.delta", double_key(DIFFBOUND_FIELD(delta))},
        {"bound.k_source", enum_key(DIFFBOUND_FIELD(bound.k_source), parse_k_source,
                                    [](KSource k) { return to_string(k); })},
        {"bound.k1", enum_key(DIFFBOUND_FIELD(bound.k1), parse_k1_rule, [](K1Rule k) { return to_string(k); })},
        {"bound.mode", enum_key(DIFFBOUND_FIELD(bound.mode), parse_bound_mode, [](BoundMode m) { return to_string(m); })},
        {"bound.n_noise", size_key(DIFFBOUND_FIELD(bound.n_noise))},
        {"bound.n_chains", size_key(DIFFBOUND_FIELD(bound.n_chains))},
        {"bound.expectation_draws", size_key(DIFFBOUND_FIELD(bound.expectation_draws))},
        {"probe.n_pairs", size_key(DIFFBOUND_FIELD(bound.probe.n_pairs))},
        {"probe.scales", list_key(DIFFBOUND_FIELD(bound.probe.scales))},
        {"validate.n", size_key(DIFFBOUND_FIELD(validate_n))},
        {"validate.projections", size_key(DIFFBOUND_FIELD(validate_projections))},
        {"validate.repeats", size_key(DIFFBOUND_FIELD(validate_repeats))},
        {"validate.trials", size_key(DIFFBOUND_FIELD(harness.n_trials))},
        {"validate.n_mc", size_key(DIFFBOUND_FIELD(harness.n_mc))},
        {"validate.chain_mc", size_key(DIFFBOUND_FIELD(harness.n_chain_mc))},
        {"sample.n", size_key(DIFFBOUND_FIELD(sample_n))},
        {"seed.data", u64_key(DIFFBOUND_FIELD(seed_data))},
        {"seed.train", u64_key(DIFFBOUND_FIELD(seed_train))},
        {"seed.bound", u64_key(DIFFBOUND_FIELD(seed_bound))},
        {"seed.validate", u64_key(DIFFBOUND_FIELD(seed_validate))},
        {"workers", size_key(DIFFBOUND_FIELD(workers))},
    };
    return table;
}

#undef DIFFBOUND_FIELD

}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const auto& table = detail::key_table();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
    try {
        it->second.set(*this, value);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("bad value '" + value + "' for '" + key + "': " + e.what());
    }
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        try {
            cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    if (cfg.version != 1) throw ConfigError(origin + ": unsupported config.version " + std::to_string(cfg.version));
    return cfg;
}

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

inline void ExperimentConfig::apply_overrides(const std::vector<std::string>& kvs) {
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        try {
            set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("--set ") + kv + ": " + e.what());
        }
    }
}

inline std::string ExperimentConfig::to_text() const {
    std::string out;
    for (const auto& [key, spec] : detail::key_table())
        if (key != "workers") out += key + " = " + spec.get(*this) + "\n";
    return out;
}

inline void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
    if (generator != "uniform_square" && generator != "uniform_circle") fail("data.generator must be uniform_square or uniform_circle");
    if (!(side > 0)) fail("data.side must be > 0");
    if (generator == "uniform_circle" && !(radius > 0 && radius <= side / 2)) fail("data.radius must lie in (0, side/2]");
    if (T < 1) fail("schedule.T must be >= 1");
    if (schedule_kind != "linear" && schedule_kind != "constant" && schedule_kind != "cosine")
        fail("schedule.kind must be linear, constant or cosine");
    if (schedule_kind != "cosine") {
        if (!(beta_start > 0 && beta_start < 1 && beta_end > 0 && beta_end < 1)) fail("schedule betas must lie in (0,1)");
        if (schedule_kind == "linear" && beta_start > beta_end) fail("schedule.beta_start must not exceed schedule.beta_end");
    }
    if (sigma_rule != "posterior" && sigma_rule != "beta") fail("schedule.sigma must be posterior or beta");
    try {
        DenoiserNet::check_config(NetConfig{2, net.hidden, net.layers, net.embed_dim, net.activation});
        train.check();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (bound_n < 1) fail("bound.n must be >= 1");
    for (double f : lambda_factors)
        if (!(f > 0)) fail("bound.lambda_factors must be positive");
    if (!(delta > 0 && delta < 1)) fail("bound.delta must lie in (0,1)");
    if (bound.n_noise < 1 || bound.n_chains < 1 || bound.expectation_draws < 1) fail("bound budgets must be >= 1");
    if (bound.probe.n_pairs < 1 || bound.probe.scales.empty()) fail("probe settings must be nonempty");
    for (double s : bound.probe.scales)
        if (!(s > 0)) fail("probe.scales must be positive");
    if (validate_n < 1 || validate_projections < 1 || validate_repeats < 1) fail("validate counts must be >= 1");
    if (harness.n_trials < 1 || harness.n_mc < 1 || harness.n_chain_mc < 1) fail("validate budgets must be >= 1");
    if (sample_n < 1) fail("sample.n must be >= 1");
    if (workers < 1) fail("workers must be >= 1");
}

}  // namespace diffbound
