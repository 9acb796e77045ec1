#pragma once

#include <cstdint>
#include <vector>

#include "aoi/simulator.hpp"
#include "aoi/snc_bounds.hpp"

namespace aoi::experiment {

// Everything the analytical bounds need about one device-subchannel link.
struct LinkInputs {
    int device = 0;
    int subchannel = 0;
    int blocklength = 1;
    int rb_count = 1;
    int contenders = 1;
    double mean_snr = 0.0;    // linear
    double eps_bar = 0.0;     // decode error averaged over fading
    double p_access = 1.0;
    double p_succ = 1.0;
    double p_o = 0.0;         // per the scenario's po_semantics
    double lambda = 1.0;      // interarrival parameter
    double arrivals_per_frame = 0.0;
    double delay_eps = 0.0;   // service-process error used by the delay bound
};

// Probability handed to the delay bound as the service error: the full
// per-frame failure under frame_failure semantics, the decode error otherwise.
double delay_service_error(const LinkInputs& in, access::PoSemantics semantics);

LinkInputs make_link_inputs(const sim::ScenarioConfig& cfg, int device, int subchannel, int contenders,
                            double p_access, double mean_snr, int eps_samples, std::uint64_t eps_seed);

// Inputs for every assigned device of the static policy, with the mean SNR
// taken from the simulator's placement and power.
std::vector<LinkInputs> scenario_links(const sim::ScenarioConfig& cfg, const sim::Simulator& sim, int eps_samples,
                                       std::uint64_t eps_seed);

struct LinkBounds {
    snc::Tightened aoi;
    snc::Tightened delay;
};

LinkBounds link_bounds(const sim::ScenarioConfig& cfg, const LinkInputs& in, double mu,
                       const snc::SearchOptions& opts = {});

// Bound on the violation probability of a record drawn from the trace:
// per-device bounds weighted by each device's share of the records.
struct MixtureBounds {
    double aoi = 1.0;
    double delay = 1.0;
};

MixtureBounds mixture_bounds(const sim::SimTrace& trace, const std::vector<LinkInputs>& links,
                             const std::vector<LinkBounds>& bounds);

}  // namespace aoi::experiment
