#include "aoi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "aoi/errors.hpp"

namespace aoi::sim {
namespace {

template <typename T>
T pick(const std::vector<T>& v, std::size_t i) {
    return v.size() == 1 ? v.front() : v.at(i);
}

template <typename T>
void check_size(const std::vector<T>& v, std::size_t full, const char* field) {
    if (v.size() != 1 && v.size() != full)
        throw ConfigError(field, "expected 1 or " + std::to_string(full) + " entries, got " + std::to_string(v.size()));
}

double exponential(Rng& rng) {
    return -std::log1p(-uniform01(rng));
}

}  // namespace

void ScenarioConfig::validate() const {
    if (devices < 1) throw ConfigError("scenario.devices", "must be >= 1");
    if (subchannels < 1) throw ConfigError("scenario.subchannels", "must be >= 1");
    if (episode_frames < 1) throw ConfigError("scenario.episode_frames", "must be >= 1");
    if (frames < 1) throw ConfigError("simulation.frames", "must be >= 1");
    if (target_updates < 0) throw ConfigError("simulation.target_updates", "must be >= 0");
    if (!(message_bits > 0.0)) throw ConfigError("scenario.message_bits", "must be > 0");
    if (!(frame_duration > 0.0)) throw ConfigError("scenario.frame_duration", "must be > 0");
    if (!(path_loss_exponent > 0.0)) throw ConfigError("scenario.path_loss_exponent", "must be > 0");
    if (!(noise_power > 0.0)) throw ConfigError("scenario.noise_power", "must be > 0");
    if (!(fading_mean > 0.0)) throw ConfigError("scenario.fading_mean", "must be > 0");
    if (!(cell_radius > 0.0)) throw ConfigError("scenario.cell_radius", "must be > 0");
    if (!(power_cap >= 0.0)) throw ConfigError("scenario.power_cap", "must be >= 0");

    const auto kl = static_cast<std::size_t>(devices) * subchannels;
    check_size(bandwidth, subchannels, "scenario.bandwidth");
    check_size(blocklength, subchannels, "scenario.blocklength");
    check_size(transmit_power, kl, "scenario.transmit_power");
    check_size(arrival, kl, "scenario.arrival");
    check_size(p_access, subchannels, "policy.p_access");

    for (double b : bandwidth)
        if (!(b > 0.0)) throw ConfigError("scenario.bandwidth", "must be > 0");
    for (int n : blocklength)
        if (n < 1) throw ConfigError("scenario.blocklength", "must be >= 1");
    for (double p : transmit_power)
        if (!(p >= 0.0)) throw ConfigError("scenario.transmit_power", "must be >= 0");
    for (double a : arrival)
        if (!(a > 0.0)) throw ConfigError("scenario.arrival", "must be > 0");
    for (double p : p_access)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("policy.p_access", "must lie in [0, 1]");
    for (int l = 0; l < subchannels; ++l) {
        try {
            fbc::rb_count(channel(l));
        } catch (const std::domain_error& e) {
            throw ConfigError("scenario.blocklength", e.what());
        }
    }
    if (power_cap > 0.0 && !mean_snr_db) {
        for (double p : transmit_power)
            if (p > power_cap) throw ConfigError("scenario.transmit_power", "exceeds power_cap");
    }
    if (!assignment.empty()) {
        if (assignment.size() != static_cast<std::size_t>(devices))
            throw ConfigError("policy.assignment", "expected one entry per device");
        for (int a : assignment)
            if (a < -1 || a >= subchannels) throw ConfigError("policy.assignment", "subchannel index out of range");
    }
    if (decode_error_override && !(*decode_error_override >= 0.0 && *decode_error_override <= 1.0))
        throw ConfigError("simulation.decode_error_override", "must lie in [0, 1]");
    if (initial_backlog < 0) throw ConfigError("simulation.initial_backlog", "must be >= 0");
    try {
        qos.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError("qos", e.what());
    }
}

fbc::ChannelModel ScenarioConfig::channel(int l) const {
    fbc::ChannelModel m;
    m.path_loss_exponent = path_loss_exponent;
    m.noise_power = noise_power;
    m.frame_duration = frame_duration;
    m.subchannel_bandwidth = pick(bandwidth, l);
    m.blocklength = pick(blocklength, l);
    m.message_bits = message_bits;
    return m;
}

int ScenarioConfig::rb_count(int l) const { return fbc::rb_count(channel(l)); }
int ScenarioConfig::blocklength_of(int l) const { return pick(blocklength, l); }

double ScenarioConfig::lambda(int k, int l) const {
    return pick(arrival, static_cast<std::size_t>(k) * subchannels + l);
}

double ScenarioConfig::lambda_unassigned(int k) const {
    double s = 0.0;
    for (int l = 0; l < subchannels; ++l) s += lambda(k, l);
    return s / subchannels;
}

double ScenarioConfig::configured_power(int k, int l) const {
    return pick(transmit_power, static_cast<std::size_t>(k) * subchannels + l);
}

double ScenarioConfig::mean_snr_linear() const {
    return mean_snr_db ? std::pow(10.0, *mean_snr_db / 10.0) : 0.0;
}

std::vector<int> ScenarioConfig::resolved_assignment() const {
    if (!assignment.empty()) return assignment;
    std::vector<int> a(devices);
    for (int k = 0; k < devices; ++k) a[k] = k % subchannels;
    return a;
}

double ScenarioConfig::p_access_of(int l) const { return pick(p_access, l); }

FrameAction static_action(const ScenarioConfig& cfg) {
    FrameAction a;
    a.assignment = cfg.resolved_assignment();
    a.p_access.resize(cfg.subchannels);
    for (int l = 0; l < cfg.subchannels; ++l) a.p_access[l] = cfg.p_access_of(l);
    return a;
}

Simulator::Simulator(ScenarioConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      fading_rng_(make_stream(seed, "fading")),
      arrivals_rng_(make_stream(seed, "arrivals")),
      acb_rng_(make_stream(seed, "acb")),
      rb_rng_(make_stream(seed, "rb")),
      decode_rng_(make_stream(seed, "decode")) {
    cfg_.validate();
    const int K = cfg_.devices;
    const int L = cfg_.subchannels;
    rb_.resize(L);
    for (int l = 0; l < L; ++l) rb_[l] = cfg_.rb_count(l);

    Rng pos_rng = make_stream(seed, "positions");
    positions_.resize(K);
    for (auto& p : positions_) {
        const double r = cfg_.cell_radius * std::sqrt(std::max(uniform01(pos_rng), 1e-12));
        const double phi = 2.0 * std::numbers::pi * uniform01(pos_rng);
        p = {r * std::cos(phi), r * std::sin(phi)};
    }

    power_.resize(static_cast<std::size_t>(K) * L);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            double p = cfg_.configured_power(k, l);
            if (cfg_.mean_snr_db) {
                const double d = std::hypot(positions_[k].x, positions_[k].y);
                p = cfg_.mean_snr_linear() * cfg_.noise_power * std::pow(d, cfg_.path_loss_exponent) /
                    cfg_.fading_mean;
            }
            power_[static_cast<std::size_t>(k) * L + l] = p;
        }
    }

    queues_.resize(K);
    for (auto& q : queues_)
        for (int i = 0; i < cfg_.initial_backlog; ++i) q.push_back({0.0, 0});
    last_generation_.assign(K, 0.0);
    last_delivery_.assign(K, -1);

    trace_.seed = seed;
    trace_.devices.resize(K);
    for (int k = 0; k < K; ++k) trace_.devices[k].arrivals = cfg_.initial_backlog;
    trace_.tagged.resize(L);
    trace_.final_queue.assign(K, cfg_.initial_backlog);

    gains_.resize(static_cast<std::size_t>(K) * L);
    draw_gains();
}

void Simulator::draw_gains() {
    for (double& g : gains_) g = cfg_.fading_mean * exponential(fading_rng_);
}

double Simulator::snr(int k, int l, double power_scale) const {
    fbc::LinkState link{positions_[k], gain(k, l), power(k, l) * power_scale};
    return fbc::sinr(link, {}, cfg_.channel(l));
}

double Simulator::decode_error(int k, int l, double power_scale) const {
    if (cfg_.decode_error_override) return *cfg_.decode_error_override;
    return fbc::decode_error(snr(k, l, power_scale), cfg_.blocklength_of(l), cfg_.message_bits);
}

double Simulator::arrival_rate(int k, int l) const {
    const double lam = l >= 0 ? cfg_.lambda(k, l) : cfg_.lambda_unassigned(k);
    return cfg_.interarrival_param == snc::InterarrivalParam::mean ? 1.0 / lam : lam;
}

void Simulator::validate_action(const FrameAction& action) const {
    const int K = cfg_.devices;
    const int L = cfg_.subchannels;
    if (action.assignment.size() != static_cast<std::size_t>(K))
        throw std::invalid_argument("action assignment must have one entry per device");
    if (action.p_access.size() != static_cast<std::size_t>(L))
        throw std::invalid_argument("action p_access must have one entry per subchannel");
    for (int k = 0; k < K; ++k) {
        const int a = action.assignment[k];
        if (a < -1 || a >= L)
            throw std::invalid_argument("device " + std::to_string(k) + " assigned to invalid subchannel " +
                                        std::to_string(a));
    }
    for (int l = 0; l < L; ++l) {
        const double p = action.p_access[l];
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("p_access on subchannel " + std::to_string(l) + " outside [0, 1]");
    }
    if (!(action.power_scale >= 0.0)) throw std::invalid_argument("power_scale must be >= 0");
}

FrameOutcome Simulator::step(const FrameAction& action) {
    validate_action(action);
    const int K = cfg_.devices;
    const int L = cfg_.subchannels;
    const double T = cfg_.frame_duration;
    const long f = frame_;

    FrameOutcome out;
    out.frame = f;
    out.devices.resize(K);

    // Arrivals over [f T, (f + 1) T); usable from the next frame.
    const double start = f * T;
    const double end = start + T;
    for (int k = 0; k < K; ++k) {
        const double rate = arrival_rate(k, action.assignment[k]);
        double t = start;
        for (;;) {
            t += exponential(arrivals_rng_) / rate;
            if (t >= end) break;
            queues_[k].push_back({t, f + 1});
            ++trace_.devices[k].arrivals;
        }
    }

    // One draw per device per stream each frame keeps streams aligned across policies.
    std::vector<double> q(K), rb_u(K), dec_u(K);
    for (int k = 0; k < K; ++k) q[k] = uniform01(acb_rng_);
    for (int k = 0; k < K; ++k) rb_u[k] = uniform01(rb_rng_);
    for (int k = 0; k < K; ++k) dec_u[k] = uniform01(decode_rng_);

    std::vector<int> block(K, -1);
    std::vector<std::vector<int>> occupancy(L);
    for (int l = 0; l < L; ++l) occupancy[l].assign(rb_[l], 0);
    for (int k = 0; k < K; ++k) {
        const int l = action.assignment[k];
        auto& d = out.devices[k];
        d.backlogged = !queues_[k].empty() && queues_[k].front().eligible_frame <= f;
        if (d.backlogged) ++trace_.devices[k].backlogged_frames;
        if (l < 0 || !d.backlogged) continue;
        if (!(q[k] < action.p_access[l])) continue;
        d.attempted = true;
        ++trace_.devices[k].attempts;
        block[k] = std::min(static_cast<int>(rb_u[k] * rb_[l]), rb_[l] - 1);
        ++occupancy[l][block[k]];
    }

    for (int l = 0; l < L; ++l)
        for (int c : occupancy[l])
            if (c > 1) out.collisions += c;

    for (int l = 0; l < L; ++l) {
        int tagged = -1;
        int contenders = 0;
        bool saturated = true;
        for (int k = 0; k < K; ++k) {
            if (action.assignment[k] != l) continue;
            ++contenders;
            if (tagged < 0)
                tagged = k;
            else if (!out.devices[k].backlogged)
                saturated = false;
        }
        if (tagged < 0 || !saturated || !out.devices[tagged].attempted) continue;
        auto& t = trace_.tagged[l];
        ++t.attempts;
        if (occupancy[l][block[tagged]] == 1) ++t.solo;
        t.expected_sum += access::access_success_prob({action.p_access[l], rb_[l], contenders});
    }

    for (int k = 0; k < K; ++k) {
        auto& d = out.devices[k];
        const int l = action.assignment[k];
        if (l >= 0) {
            d.snr = snr(k, l, action.power_scale);
            d.decode_error = cfg_.decode_error_override
                                 ? *cfg_.decode_error_override
                                 : fbc::decode_error(d.snr, cfg_.blocklength_of(l), cfg_.message_bits);
        }
        if (!d.attempted) continue;
        auto& c = trace_.devices[k];
        if (occupancy[l][block[k]] > 1) {
            ++c.collisions;
            continue;
        }
        d.solo = true;
        ++c.solo;
        if (dec_u[k] < d.decode_error) {
            ++c.decode_failures;
            continue;
        }
        d.delivered = true;
        const Packet p = queues_[k].front();
        queues_[k].pop_front();
        ++c.deliveries;

        UpdateRecord r;
        r.device = k;
        r.subchannel = l;
        r.generation_time = p.generation_time;
        r.delivery_time = (f + 1) * T;
        r.service_frames = static_cast<int>(f - std::max(p.eligible_frame, last_delivery_[k] + 1) + 1);
        r.delay_frames = static_cast<int>(f - p.eligible_frame);
        r.interarrival = p.generation_time - last_generation_[k];
        r.peak_aoi = r.interarrival + r.service_frames * T;
        last_generation_[k] = p.generation_time;
        last_delivery_[k] = f;
        out.delivered.push_back(r);
        trace_.records.push_back(r);
    }

    trace_.collisions_per_frame.push_back(out.collisions);
    for (int k = 0; k < K; ++k) {
        trace_.final_queue[k] = static_cast<long>(queues_[k].size());
        if (cfg_.record_queues) trace_.queue_lengths.push_back(static_cast<int>(queues_[k].size()));
    }
    ++frame_;
    trace_.frames = frame_;
    draw_gains();
    return out;
}

SimTrace run(const ScenarioConfig& cfg, const Policy& policy, std::uint64_t seed) {
    Simulator sim(cfg, seed);
    while (sim.frame() < cfg.frames) {
        sim.step(policy(sim));
        if (cfg.target_updates > 0 && static_cast<long>(sim.trace().records.size()) >= cfg.target_updates) break;
    }
    return sim.take_trace();
}

SimTrace run(const ScenarioConfig& cfg, std::uint64_t seed) {
    const FrameAction fixed = static_action(cfg);
    return run(cfg, [&](const Simulator&) { return fixed; }, seed);
}

Estimate binomial_estimate(long hits, long n) {
    if (n <= 0) throw std::domain_error("statistics undefined on an empty sample");
    Estimate e;
    e.count = n;
    e.value = static_cast<double>(hits) / n;
    e.std_error = std::sqrt(e.value * (1.0 - e.value) / n);
    return e;
}

Estimate empirical_peak_aoi_violation(const SimTrace& trace, double threshold) {
    const long hits = std::count_if(trace.records.begin(), trace.records.end(),
                                    [&](const UpdateRecord& r) { return r.peak_aoi > threshold; });
    return binomial_estimate(hits, static_cast<long>(trace.records.size()));
}

Estimate empirical_delay_violation(const SimTrace& trace, int delay_bound) {
    const long hits = std::count_if(trace.records.begin(), trace.records.end(),
                                    [&](const UpdateRecord& r) { return r.delay_frames > delay_bound; });
    return binomial_estimate(hits, static_cast<long>(trace.records.size()));
}

Estimate empirical_access_success(const SimTrace& trace, int subchannel) {
    const auto& t = trace.tagged.at(subchannel);
    return binomial_estimate(t.solo, t.attempts);
}

}  // namespace aoi::sim
