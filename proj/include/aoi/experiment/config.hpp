#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aoi/drl/trainer.hpp"
#include "aoi/mdp_env.hpp"
#include "aoi/simulator.hpp"
#include "aoi/snc_bounds.hpp"

namespace aoi::experiment {

using Json = nlohmann::ordered_json;

// Inputs of the analytical sweep that are not part of the scenario.
struct BoundsOptions {
    double reference_distance = 250.0;  // m; sets the mean SNR when mean_snr_db is absent
    int contenders = 0;                 // devices on the tagged subchannel; 0 means ceil(K / L)
    int eps_samples = 100000;           // fading draws for the mean decode error
    double mu = 1.0;                    // packet index in the arrival transform
    snc::SearchOptions search;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    sim::ScenarioConfig scenario;
    BoundsOptions bounds;
    mdp::ActionSpaceConfig actions;
    drl::TrainConfig train;
    std::vector<std::uint64_t> train_seeds{1, 2, 3, 4, 5};

    void validate() const;
    int bound_contenders() const;
};

// Throws ConfigError naming the offending field for unknown keys, wrong
// types, missing required fields and invariant violations.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);
// Fully resolved config, including defaults.
Json to_json(const ExperimentConfig& cfg);

struct SweepSpec {
    std::string name;
    std::vector<double> values;
};

const std::vector<std::string>& sweepable_names();

// "name=v1,v2,...", "name=lo:hi:n" or "name=lo:hi:n:log".
SweepSpec parse_sweep(std::string_view text);

// Sets one sweepable parameter. Throws std::invalid_argument for unknown names.
void apply_sweep_value(ExperimentConfig& cfg, const std::string& name, double value);

}  // namespace aoi::experiment
