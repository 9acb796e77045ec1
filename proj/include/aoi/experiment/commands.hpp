#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aoi/drl/trainer.hpp"
#include "aoi/experiment/config.hpp"
#include "aoi/simulator.hpp"

namespace aoi::experiment {

struct CommandOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<std::string> sweeps;
    std::string algo = "both";
    int workers = 1;
    std::optional<std::string> checkpoint;
    std::vector<std::string> mutations;
};

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct BoundRow {
    std::string params;  // swept names joined by ';'
    std::string values;
    double theta = 0.0;
    double aoi_threshold = 0.0;
    int blocklength = 0;
    double mean_snr_db = 0.0;
    double arrival = 0.0;
    double p_access = 0.0;
    int contenders = 0;
    int delay_bound = 0;
    double theta_tilde = 0.0;
    double message_bits = 0.0;
    int rb_count = 0;
    double eps_bar = 0.0;
    double p_succ = 0.0;
    double p_o = 0.0;
    snc::BoundResult aoi;
    snc::Tightened aoi_inf;
    snc::BoundResult delay_kernel;
    snc::Tightened delay_inf;
    double effective_capacity = 0.0;
    double ec_threshold = 0.0;
    double c1_value = 0.0;
};

// Mean SNR of the tagged link used by the analytical sweep.
double bounds_mean_snr(const ExperimentConfig& cfg);

// Fading-averaged decode error of the tagged link.
double bounds_eps_bar(const ExperimentConfig& cfg);

// eps_bar, when given, replaces the Monte-Carlo estimate.
BoundRow evaluate_bound_point(const ExperimentConfig& cfg, std::optional<double> eps_bar = std::nullopt);

// Cartesian product of the sweeps, first sweep outermost. Throws
// std::invalid_argument on conflicting sweeps.
std::vector<BoundRow> bounds_sweep(const ExperimentConfig& base, const std::vector<SweepSpec>& sweeps, int workers);
std::string bounds_csv(const std::vector<BoundRow>& rows);

struct SimulationResult {
    sim::SimTrace trace;
    Json summary;
    bool valid = false;
};

SimulationResult simulate(const ExperimentConfig& cfg, std::uint64_t seed);

struct TrainRun {
    drl::Algorithm algorithm = drl::Algorithm::ddqn;
    std::uint64_t seed = 0;
    drl::TrainResult result;
};

TrainRun train_one(const ExperimentConfig& cfg, drl::Algorithm algo, std::uint64_t seed);
// Environment seeds of the final training window.
std::vector<std::uint64_t> final_window_seeds(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<drl::EpisodeLog> random_baseline(const ExperimentConfig& cfg, std::uint64_t seed);

// One-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p_value(int wins, int trials);

int run_bounds(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int run_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int run_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int run_evaluate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int run_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace aoi::experiment
