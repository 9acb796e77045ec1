// Command-line front end: bounds sweeps, simulator runs, training, evaluation
// and the oracle suite.
#include <malloc.h>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aoi/errors.hpp"
#include "aoi/experiment/commands.hpp"

namespace ex = aoi::experiment;

int main(int argc, char** argv) {
    // Training allocates many short-lived matrices; keep them off mmap.
    mallopt(M_MMAP_THRESHOLD, 1 << 28);
    mallopt(M_TRIM_THRESHOLD, 1 << 28);

    CLI::App app{"Peak-AoI and delay bounds, random-access simulation and DRL resource allocation"};
    app.require_subcommand(1);

    ex::CommandOptions opts;
    std::uint64_t seed = 0;
    std::string out;
    std::string checkpoint;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opts.config_path, "JSON scenario/experiment config");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--out", out, "output directory (default $AOI_OUT_DIR, else ./out)");
        sub->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* bounds = app.add_subcommand("bounds", "sweep the analytical bounds");
    common(bounds, true);
    bounds->add_option("--sweep", opts.sweeps, "name=v1,v2,... or name=lo:hi:n[:log]; repeat for a grid");

    auto* simulate = app.add_subcommand("simulate", "run the simulator and compare against the bounds");
    common(simulate, true);

    auto* train = app.add_subcommand("train", "train DDQN and/or dueling agents");
    common(train, true);
    train->add_option("--algo", opts.algo, "ddqn, dueling or both")
        ->check(CLI::IsMember({"ddqn", "dueling", "both"}));

    auto* evaluate = app.add_subcommand("evaluate", "run a trained checkpoint greedily");
    common(evaluate, true);
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint JSON written by train")->required();

    auto* validate = app.add_subcommand("validate", "run the oracle suite");
    validate->add_option("--seed", seed, "master seed");
    validate->add_option("--out", out, "also write validation.csv here");
    validate->add_option("--mutate", opts.mutations, "inject a known fault: service-time-sign");

    CLI11_PARSE(app, argc, argv);

    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--out")) opts.out = out;
        if (sub->get_option_no_throw("--checkpoint") && sub->count("--checkpoint")) opts.checkpoint = checkpoint;
    }

    try {
        if (bounds->parsed()) return ex::run_bounds(opts, std::cout, std::cerr);
        if (simulate->parsed()) return ex::run_simulate(opts, std::cout, std::cerr);
        if (train->parsed()) return ex::run_train(opts, std::cout, std::cerr);
        if (evaluate->parsed()) return ex::run_evaluate(opts, std::cout, std::cerr);
        return ex::run_validate(opts, std::cout, std::cerr);
    } catch (const aoi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
