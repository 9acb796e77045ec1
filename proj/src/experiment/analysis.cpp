#include "aoi/experiment/analysis.hpp"

#include <cmath>

#include "aoi/random_access.hpp"

namespace aoi::experiment {

double delay_service_error(const LinkInputs& in, access::PoSemantics semantics) {
    if (semantics == access::PoSemantics::frame_failure) return 1.0 - in.p_access * in.p_succ * (1.0 - in.eps_bar);
    return in.eps_bar;
}

LinkInputs make_link_inputs(const sim::ScenarioConfig& cfg, int device, int subchannel, int contenders,
                            double p_access, double mean_snr, int eps_samples, std::uint64_t eps_seed) {
    LinkInputs in;
    in.device = device;
    in.subchannel = subchannel;
    in.blocklength = cfg.blocklength_of(subchannel);
    in.rb_count = cfg.rb_count(subchannel);
    in.contenders = contenders;
    in.mean_snr = mean_snr;
    in.eps_bar = cfg.decode_error_override
                     ? *cfg.decode_error_override
                     : snc::mean_decode_error(mean_snr, in.blocklength, cfg.message_bits, eps_samples, eps_seed);
    in.p_access = p_access;
    in.p_succ = access::access_success_prob({p_access, in.rb_count, contenders});
    in.p_o = access::overall_success_prob(in.p_succ, p_access, in.eps_bar, cfg.po_semantics);
    in.lambda = cfg.lambda(device, subchannel);
    in.arrivals_per_frame = snc::arrivals_per_frame(in.lambda, cfg.frame_duration, cfg.interarrival_param);
    in.delay_eps = delay_service_error(in, cfg.po_semantics);
    return in;
}

std::vector<LinkInputs> scenario_links(const sim::ScenarioConfig& cfg, const sim::Simulator& sim, int eps_samples,
                                       std::uint64_t eps_seed) {
    const auto assignment = cfg.resolved_assignment();
    std::vector<int> contenders(cfg.subchannels, 0);
    for (int a : assignment)
        if (a >= 0) ++contenders[a];
    std::vector<LinkInputs> out;
    for (int k = 0; k < cfg.devices; ++k) {
        const int l = assignment[k];
        if (l < 0) continue;
        const double d = std::hypot(sim.positions()[k].x, sim.positions()[k].y);
        const double mean_snr =
            sim.power(k, l) * std::pow(d, -cfg.path_loss_exponent) * cfg.fading_mean / cfg.noise_power;
        out.push_back(make_link_inputs(cfg, k, l, contenders[l], cfg.p_access_of(l), mean_snr, eps_samples,
                                       derive_seed(eps_seed, "link", static_cast<std::uint64_t>(k))));
    }
    return out;
}

LinkBounds link_bounds(const sim::ScenarioConfig& cfg, const LinkInputs& in, double mu,
                       const snc::SearchOptions& opts) {
    LinkBounds b;
    b.aoi = snc::tighten_peak_aoi_bound(in.lambda, in.p_o, cfg.frame_duration, cfg.qos.peak_aoi_threshold,
                                        cfg.interarrival_param, opts);
    snc::DelayModel m;
    m.eps_bar = in.delay_eps;
    m.message_bits = cfg.message_bits;
    m.lambda = in.arrivals_per_frame;
    m.mu = mu;
    m.units = cfg.arrival_units;
    b.delay = snc::delay_violation_bound(m, cfg.qos.delay_bound, opts);
    return b;
}

MixtureBounds mixture_bounds(const sim::SimTrace& trace, const std::vector<LinkInputs>& links,
                             const std::vector<LinkBounds>& bounds) {
    std::vector<long> per_device(trace.devices.size(), 0);
    for (const auto& r : trace.records) ++per_device[r.device];
    const double total = static_cast<double>(trace.records.size());
    MixtureBounds m;
    if (total == 0.0) return m;
    m.aoi = 0.0;
    m.delay = 0.0;
    for (std::size_t i = 0; i < links.size(); ++i) {
        const double w = per_device[links[i].device] / total;
        m.aoi += w * bounds[i].aoi.result.bound;
        m.delay += w * bounds[i].delay.result.bound;
    }
    return m;
}

}  // namespace aoi::experiment
