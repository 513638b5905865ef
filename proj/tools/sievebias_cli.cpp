#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "sievebias/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
    std::string config_path;
    sievebias::CliOverrides overrides;
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (TOML)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", args.overrides.out_dir, "output directory");
    auto* seed = cmd->add_option("--seed", args.overrides.seed, "master seed (u64)");
    auto* threads = cmd->add_option("--threads", args.overrides.threads, "worker threads");
    cmd->parse_complete_callback([&args, out, seed, threads] {
        args.overrides.has_out = out->count() > 0;
        args.overrides.has_seed = seed->count() > 0;
        args.overrides.has_threads = threads->count() > 0;
    });
}

int run(const CommonArgs& args) {
    using namespace sievebias;
    try {
        const ExperimentConfig config =
            load_experiment_config(args.config_path, args.overrides);
        run_experiment(config);
        return kExitOk;
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bias certificates for sieve profile estimation"};
    app.require_subcommand(1);

    const char* modes[] = {"audit", "certify", "simulate", "rates", "verify-bounds"};
    const char* descriptions[] = {
        "estimate every audited condition scalar for one model",
        "assemble bias certificates, bound formulas and validity flags",
        "replicate study of the profile estimator on sampled data",
        "rate sweep of alpha(m), beta(m), tau(m) and the tail energy",
        "recompute bounds against measured quantities, emit counterexamples"};

    CommonArgs args;
    for (int i = 0; i < 5; ++i) {
        CLI::App* cmd = app.add_subcommand(modes[i], descriptions[i]);
        attach_common(cmd, args);
        cmd->callback([&args, cmd] { args.overrides.mode = cmd->get_name(); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    return run(args);
}
