#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffbound/diffbound.hpp"

using namespace diffbound;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "experiment config (key = value lines)");
    cmd->add_option("--set", c.overrides, "override a config key, key=value")->take_all();
    cmd->add_option("--out", c.out, "output directory");
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(c.config_path);
    cfg.apply_overrides(c.overrides);
    cfg.validate();
    return cfg;
}

std::string checkpoint_or_default(const std::string& ckpt, const Common& c) {
    return ckpt.empty() ? c.out + "/model.ckpt" : ckpt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Train a small diffusion model and certify its Wasserstein-1 error bound"};
    app.require_subcommand(1);

    Common gen_c, train_c, bound_c, valid_c, sample_c;
    std::string bound_ckpt, valid_ckpt, sample_ckpt;
    std::size_t sample_n = 0;
    bool quiet = false;

    auto* gen = app.add_subcommand("gen-data", "draw the training and bound samples");
    add_common(gen, gen_c);
    auto* trn = app.add_subcommand("train", "train the denoiser; writes model.ckpt and loss.csv");
    add_common(trn, train_c);
    trn->add_flag("--quiet", quiet, "no progress output");
    auto* bnd = app.add_subcommand("bound", "compute the bound over the lambda grid; writes bound.json and bound.csv");
    add_common(bnd, bound_c);
    bnd->add_option("--checkpoint", bound_ckpt, "model checkpoint (default <out>/model.ckpt)");
    auto* val = app.add_subcommand("validate", "check the bound against empirical W1 and run the contraction checks");
    add_common(val, valid_c);
    val->add_option("--checkpoint", valid_ckpt, "model checkpoint (default <out>/model.ckpt)");
    auto* smp = app.add_subcommand("sample", "draw samples from the trained model; writes samples.csv");
    add_common(smp, sample_c);
    smp->add_option("--checkpoint", sample_ckpt, "model checkpoint (default <out>/model.ckpt)");
    smp->add_option("-n", sample_n, "number of samples (default sample.n)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto cfg = load(gen_c);
            cmd_gen_data(cfg, gen_c.out);
            std::printf("wrote %s/train_data.csv (%zu) and %s/bound_data.csv (%zu)\n", gen_c.out.c_str(), cfg.train.n_train,
                        gen_c.out.c_str(), cfg.bound_n);
        } else if (*trn) {
            const auto cfg = load(train_c);
            const std::size_t every = std::max<std::size_t>(1, cfg.train.steps / 20);
            const auto res = cmd_train(cfg, train_c.out, [&](std::size_t step, double loss) {
                if (!quiet && (step % every == 0 || step + 1 == cfg.train.steps))
                    std::fprintf(stderr, "step %zu/%zu loss %.6f\n", step + 1, cfg.train.steps, loss);
            });
            std::printf("wrote %s (checksum %016llx)\n", res.checkpoint_path.c_str(),
                        static_cast<unsigned long long>(res.checkpoint_checksum));
        } else if (*bnd) {
            const auto cfg = load(bound_c);
            const auto reports = cmd_bound(cfg, checkpoint_or_default(bound_ckpt, bound_c), bound_c.out);
            std::printf("%12s %10s %10s %10s %10s %10s %10s\n", "lambda", "recon", "kl", "pac", "cross", "sigma", "total");
            for (const auto& r : reports)
                std::printf("%12.1f %10.5f %10.5f %10.5f %10.5f %10.5f %10.5f\n", r.lambda, r.term_recon, r.term_kl, r.term_pac,
                            r.term_cross, r.term_sigma, r.total);
            std::printf("trivial bound (diameter): %.5f\n", reports.front().Delta);
        } else if (*val) {
            const auto cfg = load(valid_c);
            const auto rep = cmd_validate(cfg, checkpoint_or_default(valid_ckpt, valid_c), valid_c.out);
            double min_total = rep.bounds.front().total;
            for (const auto& b : rep.bounds) min_total = std::min(min_total, b.total);
            for (std::size_t r = 0; r < rep.repeats.size(); ++r) {
                const auto& vr = rep.repeats[r];
                std::printf("repeat %zu: sliced %.5f exact %s trivial %.5f  min bound %.5f  %s\n", r, vr.sliced.value,
                            vr.exact ? std::to_string(vr.exact->value).c_str() : "n/a", vr.trivial.value, min_total,
                            vr.pass ? "PASS" : "FAIL");
            }
            std::size_t failed_t = 0;
            for (const auto& v : rep.contraction) failed_t += v.pass ? 0 : 1;
            std::printf("one-step contraction: %zu/%zu steps pass\n", rep.contraction.size() - failed_t, rep.contraction.size());
            if (!rep.contraction.empty())
                std::printf("iterated contraction: %s (worst margin %.5g)\n", rep.iterated.pass ? "PASS" : "FAIL",
                            rep.iterated.worst_margin);
            std::printf("%s\n", rep.pass() ? "VALID" : "INVALID");
            return rep.pass() ? 0 : 1;
        } else if (*smp) {
            const auto cfg = load(sample_c);
            const std::size_t n = sample_n ? sample_n : cfg.sample_n;
            cmd_sample(cfg, checkpoint_or_default(sample_ckpt, sample_c), n, sample_c.out);
            std::printf("wrote %s/samples.csv (%zu)\n", sample_c.out.c_str(), n);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
