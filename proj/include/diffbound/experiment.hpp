#pragma once

// End-to-end experiment commands shared by the CLI and the integration tests.
// Every artifact is a pure function of the config; no timestamps or host
// details are written, so reruns are byte-identical.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bound.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "denoiser.hpp"
#include "trainer.hpp"
#include "transport.hpp"

namespace diffbound {

inline constexpr const char* kVersion = "diffbound 0.1.0";

inline NoiseSchedule make_schedule(const ExperimentConfig& cfg) {
    const SigmaRule rule = cfg.sigma_rule == "beta" ? SigmaRule::beta : SigmaRule::posterior;
    if (cfg.schedule_kind == "constant") return constant_schedule(cfg.T, cfg.beta_start, rule);
    if (cfg.schedule_kind == "cosine") return cosine_schedule(cfg.T, 0.008, 0.999, rule);
    return linear_schedule(cfg.T, cfg.beta_start, cfg.beta_end, rule);
}

inline Box make_domain_box(const ExperimentConfig& cfg) { return Box::cube(2, -cfg.side / 2, cfg.side / 2); }

/// n iid draws from the configured data distribution.
inline SampleSet draw_data(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed, const std::string& label) {
    Rng rng(seed, label);
    if (cfg.generator == "uniform_circle") return uniform_circle(n, cfg.radius, cfg.side / 2, rng, seed);
    return uniform_square(n, cfg.side, rng, seed);
}

inline SampleSet training_data(const ExperimentConfig& cfg) {
    return draw_data(cfg, cfg.train.n_train, cfg.seed_data, "data.train");
}

inline SampleSet bound_data(const ExperimentConfig& cfg) { return draw_data(cfg, cfg.bound_n, cfg.seed_bound, "data.bound"); }

/// Untrained model with freshly initialized weights (train seed).
inline DiffusionModel initial_model(const ExperimentConfig& cfg) {
    NetConfig nc = cfg.net;
    nc.dim = 2;
    Rng rng(cfg.seed_train, "train.init");
    return DiffusionModel{make_schedule(cfg), DenoiserNet::random(nc, rng), make_domain_box(cfg)};
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

inline nlohmann::json manifest(const ExperimentConfig& cfg, const std::string& command) {
    return {{"command", command},
            {"code_version", kVersion},
            {"config_hash", cfg.hash()},
            {"config", cfg.to_text()},
            {"seeds", {{"data", cfg.seed_data}, {"train", cfg.seed_train}, {"bound", cfg.seed_bound}, {"validate", cfg.seed_validate}}}};
}

inline std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace detail

inline std::filesystem::path prepare_out(const std::string& dir) {
    std::filesystem::create_directories(dir);
    return dir;
}

inline void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    const auto out = prepare_out(out_dir);
    save_sample_set(training_data(cfg), (out / "train_data.csv").string());
    save_sample_set(bound_data(cfg), (out / "bound_data.csv").string());
    detail::write_file(out / "manifest_gen-data.json", detail::manifest(cfg, "gen-data").dump(2) + "\n");
}

struct TrainOutput {
    DiffusionModel model;
    std::vector<double> loss_trace;
    std::string checkpoint_path;
    std::uint64_t checkpoint_checksum = 0;
};

inline TrainOutput cmd_train(const ExperimentConfig& cfg, const std::string& out_dir,
                             const std::function<void(std::size_t, double)>& progress = {}) {
    cfg.validate();
    const auto out = prepare_out(out_dir);
    const SampleSet data = training_data(cfg);
    TrainResult res = train(initial_model(cfg), data, cfg.train_config(), progress);
    const std::string bytes = serialize_model(res.model);
    const auto ckpt = out / "model.ckpt";
    detail::write_file(ckpt, bytes);
    detail::write_file(out / "loss.csv", loss_csv(res.loss_trace));
    detail::write_file(out / "schedule.csv", schedule_csv(res.model.schedule));
    TrainOutput to{std::move(res.model), std::move(res.loss_trace), ckpt.string(), checksum(std::string_view(bytes).substr(0, bytes.size() - 8))};
    auto man = detail::manifest(cfg, "train");
    man["checkpoint_checksum"] = detail::hex64(to.checkpoint_checksum);
    man["final_loss"] = to.loss_trace.back();
    detail::write_file(out / "manifest_train.json", man.dump(2) + "\n");
    return to;
}

/// Throws when the checkpoint's schedule, box or network shape differ from the config.
inline DiffusionModel load_model_for(const ExperimentConfig& cfg, const std::string& ckpt) {
    DiffusionModel m = load_checkpoint(ckpt);
    if (!(m.schedule == make_schedule(cfg))) throw std::runtime_error("checkpoint schedule does not match config");
    if (!(m.domain_box == make_domain_box(cfg))) throw std::runtime_error("checkpoint domain box does not match config");
    const NetConfig& nc = m.net.config();
    if (nc.hidden != cfg.net.hidden || nc.layers != cfg.net.layers || nc.embed_dim != cfg.net.embed_dim ||
        nc.activation != cfg.net.activation)
        throw std::runtime_error("checkpoint network shape does not match config");
    return m;
}

inline std::vector<BoundReport> run_bound(const ExperimentConfig& cfg, const DiffusionModel& m) {
    return lambda_sweep(m, bound_data(cfg), cfg.lambdas(), cfg.delta, cfg.bound_config());
}

inline std::vector<BoundReport> cmd_bound(const ExperimentConfig& cfg, const std::string& ckpt, const std::string& out_dir) {
    cfg.validate();
    const auto out = prepare_out(out_dir);
    const DiffusionModel m = load_model_for(cfg, ckpt);
    const auto reports = run_bound(cfg, m);
    nlohmann::json j = detail::manifest(cfg, "bound");
    j["reports"] = nlohmann::json::array();
    for (const auto& r : reports) j["reports"].push_back(to_json(r));
    j["trivial_bound"] = domain_diameter(m.domain_box);
    detail::write_file(out / "bound.json", j.dump(2) + "\n");
    detail::write_file(out / "bound.csv", bound_csv(reports));
    return reports;
}

struct ValidityRepeat {
    W1Estimate sliced;
    std::optional<W1Estimate> exact;
    W1Estimate trivial;
    bool pass = true;
};

struct ValidityReport {
    std::vector<BoundReport> bounds;
    std::vector<ValidityRepeat> repeats;
    std::vector<Verdict> contraction;  // index t-1
    Verdict iterated;
    bool bound_valid = true;
    bool lemmas_pass = true;
    bool pass() const { return bound_valid && lemmas_pass; }
};

/// Compares the certified totals against empirical W1 estimates between fresh
/// data samples and model samples, then runs both contraction harnesses.
inline ValidityReport run_validate(const ExperimentConfig& cfg, const DiffusionModel& m, bool with_harness = true) {
    ValidityReport rep;
    rep.bounds = run_bound(cfg, m);
    for (std::size_t r = 0; r < cfg.validate_repeats; ++r) {
        const SampleSet mu = draw_data(cfg, cfg.validate_n, derive_seed(cfg.seed_validate, "validate.mu", r), "validate.mu");
        Rng model_rng(cfg.seed_validate, "validate.model", r);
        const Batch gen = generate(m, static_cast<Eigen::Index>(cfg.validate_n), model_rng);
        std::vector<Point> model_pts;
        for (Eigen::Index j = 0; j < gen.cols(); ++j) model_pts.push_back(gen.col(j));
        ValidityRepeat vr;
        vr.sliced = sliced_w1_lower(mu.points, model_pts, cfg.validate_projections,
                                    derive_seed(cfg.seed_validate, "validate.sliced", r), cfg.workers);
        if (cfg.validate_n <= kExactSizeLimit) vr.exact = exact_w1(mu.points, model_pts);
        vr.trivial = trivial_coupling_upper(mu.points, model_pts);
        for (const auto& b : rep.bounds) {
            const double ceiling = b.total + 3.0 * b.std_error;
            if (ceiling < vr.sliced.value) vr.pass = false;
            if (vr.exact && ceiling < vr.exact->value) vr.pass = false;
        }
        rep.bound_valid = rep.bound_valid && vr.pass;
        rep.repeats.push_back(std::move(vr));
    }
    if (with_harness) {
        const HarnessConfig h = cfg.harness_config();
        for (int t = 1; t <= m.T(); ++t) {
            rep.contraction.push_back(check_contraction(m, t, h));
            rep.lemmas_pass = rep.lemmas_pass && rep.contraction.back().pass;
        }
        if (m.T() >= 2) {
            rep.iterated = check_iterated_contraction(m, h);
            rep.lemmas_pass = rep.lemmas_pass && rep.iterated.pass;
        }
    }
    return rep;
}

inline nlohmann::json to_json(const ValidityReport& rep) {
    nlohmann::json j;
    j["pass"] = rep.pass();
    j["bound_valid"] = rep.bound_valid;
    j["lemmas_pass"] = rep.lemmas_pass;
    j["bounds"] = nlohmann::json::array();
    for (const auto& b : rep.bounds) j["bounds"].push_back({{"lambda", b.lambda}, {"total", b.total}, {"std_error", b.std_error}});
    j["repeats"] = nlohmann::json::array();
    for (const auto& r : rep.repeats) {
        nlohmann::json rj = {{"sliced", to_json(r.sliced)}, {"trivial", to_json(r.trivial)}, {"pass", r.pass}};
        if (r.exact) rj["exact"] = to_json(*r.exact);
        j["repeats"].push_back(rj);
    }
    j["contraction"] = nlohmann::json::array();
    for (const auto& v : rep.contraction) j["contraction"].push_back(to_json(v));
    if (!rep.contraction.empty()) j["iterated_contraction"] = to_json(rep.iterated);
    return j;
}

inline ValidityReport cmd_validate(const ExperimentConfig& cfg, const std::string& ckpt, const std::string& out_dir) {
    cfg.validate();
    const auto out = prepare_out(out_dir);
    const DiffusionModel m = load_model_for(cfg, ckpt);
    ValidityReport rep = run_validate(cfg, m);
    nlohmann::json j = detail::manifest(cfg, "validate");
    j["validity"] = to_json(rep);
    detail::write_file(out / "validate.json", j.dump(2) + "\n");
    return rep;
}

inline std::vector<Point> cmd_sample(const ExperimentConfig& cfg, const std::string& ckpt, std::size_t n,
                                     const std::string& out_dir) {
    cfg.validate();
    const auto out = prepare_out(out_dir);
    const DiffusionModel m = load_model_for(cfg, ckpt);
    Rng rng(cfg.seed_validate, "sample");
    const Batch gen = generate(m, static_cast<Eigen::Index>(n), rng);
    std::vector<Point> pts;
    for (Eigen::Index j = 0; j < gen.cols(); ++j) pts.push_back(gen.col(j));
    detail::write_file(out / "samples.csv", points_csv(pts, m.dim()));
    return pts;
}

}  // namespace diffbound
