#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/experiment/analysis.hpp"
#include "aoi/snc_bounds.hpp"

namespace aoi::experiment {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Transforms under test. The sampling checks compare these against Monte
// Carlo, so a broken formula can be injected here to confirm a check catches it.
struct ValidationHooks {
    std::function<snc::MellinEval(double lambda, double theta, int sign)> interarrival;
    std::function<snc::MellinEval(double p_o, double frame_duration, double theta)> service_time;
    std::function<snc::MellinEval(double eps_bar, double message_bits, double theta_t)> service_process;
    std::function<snc::MellinEval(double lambda, double mu, double theta_t)> arrival;
};

ValidationHooks default_hooks();
// Known mutations: "service-time-sign".
ValidationHooks mutated_hooks(std::string_view mutation);
std::vector<std::string> mutation_names();

struct ValidationOptions {
    std::uint64_t seed = 1;
    int mellin_samples = 1000000;
    int mellin_points = 10;
    double mellin_tolerance = 0.01;  // relative
    int validity_configs = 4;
    long validity_updates = 20000;
    int gradient_networks = 20;
};

// One randomly drawn single-subchannel scenario with A_th and D_th picked so
// the analytical bounds are informative.
struct ValidityCase {
    int index = 0;
    sim::ScenarioConfig scenario;
    std::vector<LinkInputs> links;
    std::vector<LinkBounds> bounds;
    sim::Estimate aoi;
    sim::Estimate delay;
    MixtureBounds mixture;
    bool aoi_ok = false;
    bool delay_ok = false;
};

ValidityCase make_validity_case(std::uint64_t seed, int index, long updates);
ValidityCase run_validity_case(std::uint64_t seed, int index, long updates);

std::vector<CheckResult> run_validation(const ValidationOptions& opts, const ValidationHooks& hooks);
std::string format_report(const std::vector<CheckResult>& results);

}  // namespace aoi::experiment
