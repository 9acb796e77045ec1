#include "aoi/mdp_env.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "aoi/errors.hpp"

namespace aoi::mdp {
namespace {

constexpr long kMaxEnumeratedPatterns = 1L << 20;

long ipow(long base, int exp) {
    long r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

double snr_feature(double snr) {
    return std::min(fbc::capacity(snr), 8.0) / 8.0;
}

}  // namespace

ActionMode parse_action_mode(std::string_view name) {
    if (name == "enumerate") return ActionMode::enumerate;
    if (name == "candidates") return ActionMode::candidates;
    throw std::invalid_argument("unknown action mode '" + std::string(name) + "' (expected enumerate or candidates)");
}

std::string_view to_string(ActionMode m) {
    return m == ActionMode::enumerate ? "enumerate" : "candidates";
}

void ActionSpaceConfig::validate() const {
    if (p_grid.empty()) throw ConfigError("actions.p_grid", "must not be empty");
    for (double p : p_grid)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("actions.p_grid", "entries must lie in [0, 1]");
    if (candidate_cap < 1) throw ConfigError("actions.candidate_cap", "must be >= 1");
    for (double s : power_levels)
        if (!(s >= 0.0)) throw ConfigError("actions.power_levels", "entries must be >= 0");
}

sim::FrameAction to_frame_action(const Action& a, int devices, int subchannels) {
    if (a.b.size() != static_cast<std::size_t>(devices) * subchannels)
        throw std::invalid_argument("allocation matrix has wrong shape");
    if (a.p_access.size() != static_cast<std::size_t>(subchannels))
        throw std::invalid_argument("p_access must have one entry per subchannel");
    sim::FrameAction f;
    f.assignment.assign(devices, -1);
    for (int k = 0; k < devices; ++k) {
        for (int l = 0; l < subchannels; ++l) {
            const auto v = a.b[static_cast<std::size_t>(k) * subchannels + l];
            if (v > 1) throw std::invalid_argument("allocation flags must be 0 or 1");
            if (v == 0) continue;
            if (f.assignment[k] >= 0)
                throw std::invalid_argument("device " + std::to_string(k) + " holds more than one subchannel");
            f.assignment[k] = l;
        }
    }
    for (double p : a.p_access)
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p_access outside [0, 1]");
    f.p_access = a.p_access;
    f.power_scale = a.power_scale;
    return f;
}

Action from_frame_action(const sim::FrameAction& f, int subchannels) {
    Action a;
    a.b.assign(f.assignment.size() * subchannels, 0);
    for (std::size_t k = 0; k < f.assignment.size(); ++k)
        if (f.assignment[k] >= 0) a.b[k * subchannels + f.assignment[k]] = 1;
    a.p_access = f.p_access;
    a.power_scale = f.power_scale;
    return a;
}

long ActionSpace::enumerated_size(int devices, int subchannels, const ActionSpaceConfig& cfg) {
    const long choices = cfg.require_assignment ? subchannels : subchannels + 1;
    const long g = static_cast<long>(cfg.p_grid.size());
    const long thresholds = cfg.per_subchannel_threshold ? ipow(g, subchannels) : g;
    const long powers = cfg.power_levels.empty() ? 1 : static_cast<long>(cfg.power_levels.size());
    return ipow(choices, devices) * thresholds * powers;
}

ActionSpace::ActionSpace(const ActionSpaceConfig& cfg, int devices, int subchannels)
    : cfg_(cfg), devices_(devices), subchannels_(subchannels) {
    cfg_.validate();
    const long g = static_cast<long>(cfg_.p_grid.size());
    thresholds_ = cfg_.per_subchannel_threshold ? ipow(g, subchannels) : g;
    const int choices = cfg_.require_assignment ? subchannels : subchannels + 1;
    const int offset = cfg_.require_assignment ? 0 : -1;

    if (cfg_.mode == ActionMode::enumerate) {
        double total = std::pow(static_cast<double>(choices), devices);
        if (total > kMaxEnumeratedPatterns)
            throw ConfigError("actions.mode", "enumeration of " + std::to_string(static_cast<long>(total)) +
                                                  " patterns is too large; use candidates");
        const long n = ipow(choices, devices);
        patterns_.reserve(n);
        for (long idx = 0; idx < n; ++idx) {
            std::vector<int> p(devices);
            long rest = idx;
            for (int k = devices - 1; k >= 0; --k) {
                p[k] = static_cast<int>(rest % choices) + offset;
                rest /= choices;
            }
            patterns_.push_back(std::move(p));
        }
        return;
    }

    std::set<std::vector<int>> seen;
    std::vector<int> round_robin(devices);
    for (int k = 0; k < devices; ++k) round_robin[k] = k % subchannels;
    patterns_.push_back(round_robin);
    seen.insert(round_robin);
    Rng rng = make_stream(cfg_.candidate_seed, "action_candidates");
    const long limit = static_cast<long>(cfg_.candidate_cap) * 100;
    for (long tries = 0; static_cast<int>(patterns_.size()) < cfg_.candidate_cap && tries < limit; ++tries) {
        std::vector<int> p(devices);
        for (int k = 0; k < devices; ++k)
            p[k] = std::min(static_cast<int>(uniform01(rng) * choices), choices - 1) + offset;
        if (seen.insert(p).second) patterns_.push_back(std::move(p));
    }
}

long ActionSpace::power_options() const {
    return cfg_.power_levels.empty() ? 1 : static_cast<long>(cfg_.power_levels.size());
}

long ActionSpace::size() const {
    return static_cast<long>(patterns_.size()) * thresholds_ * power_options();
}

sim::FrameAction ActionSpace::decode_frame(long index) const {
    if (index < 0 || index >= size()) throw std::out_of_range("action index " + std::to_string(index) + " out of range");
    const long powers = power_options();
    const long power_idx = index % powers;
    long rest = index / powers;
    long thr = rest % thresholds_;
    const long pattern = rest / thresholds_;

    sim::FrameAction f;
    f.assignment = patterns_[pattern];
    f.p_access.resize(subchannels_);
    const long g = static_cast<long>(cfg_.p_grid.size());
    if (cfg_.per_subchannel_threshold) {
        for (int l = subchannels_ - 1; l >= 0; --l) {
            f.p_access[l] = cfg_.p_grid[thr % g];
            thr /= g;
        }
    } else {
        std::fill(f.p_access.begin(), f.p_access.end(), cfg_.p_grid[thr]);
    }
    f.power_scale = cfg_.power_levels.empty() ? 1.0 : cfg_.power_levels[power_idx];
    return f;
}

Action ActionSpace::decode(long index) const {
    return from_frame_action(decode_frame(index), subchannels_);
}

double reward_of(std::span<const LinkTerm> terms) {
    double r = 0.0;
    for (const auto& t : terms) {
        r -= t.p_aoi;
        if (t.subchannel >= 0) r -= t.eta * t.c1;
    }
    return r;
}

double discounted_return(std::span<const double> rewards, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in [0, 1)");
    double sum = 0.0;
    double w = beta;
    for (double r : rewards) {
        sum += w * r;
        w *= beta;
    }
    return sum;
}

MdpEnv::MdpEnv(sim::ScenarioConfig scenario, const ActionSpaceConfig& actions)
    : cfg_(std::move(scenario)), space_(actions, cfg_.devices, cfg_.subchannels) {
    cfg_.record_queues = false;
    cfg_.validate();
    reset(cfg_.seed);
}

int MdpEnv::observation_size() const {
    return 2 * cfg_.devices + 3 * cfg_.devices * cfg_.subchannels;
}

Eigen::VectorXd MdpEnv::reset(std::uint64_t seed) {
    sim_ = std::make_unique<sim::Simulator>(cfg_, seed);
    previous_ = sim::static_action(cfg_);
    last_terms_.clear();
    rewards_.clear();
    steps_ = 0;
    refresh_state();
    return observation();
}

double MdpEnv::link_p_aoi(int k, int l, double p_access, int contenders, double power_scale) const {
    const double eps = sim_->decode_error(k, l, power_scale);
    const double p_succ = access::access_success_prob({p_access, cfg_.rb_count(l), contenders});
    const double p_o = access::overall_success_prob(p_succ, p_access, eps, cfg_.po_semantics);
    return snc::peak_aoi_bound(cfg_.lambda(k, l), p_o, cfg_.frame_duration, cfg_.qos.aoi_exponent,
                               cfg_.qos.peak_aoi_threshold, cfg_.interarrival_param)
        .bound;
}

std::vector<LinkTerm> MdpEnv::link_terms(const sim::FrameAction& action) const {
    const int K = cfg_.devices;
    std::vector<int> contenders(cfg_.subchannels, 0);
    for (int a : action.assignment)
        if (a >= 0) ++contenders[a];
    std::vector<LinkTerm> terms(K);
    for (int k = 0; k < K; ++k) {
        auto& t = terms[k];
        t.device = k;
        const int l = action.assignment[k];
        if (l < 0) continue;
        t.subchannel = l;
        t.p_aoi = link_p_aoi(k, l, action.p_access[l], contenders[l], action.power_scale);
        const double eps = sim_->decode_error(k, l, action.power_scale);
        t.c1 = snc::c1_constraint_value(eps, cfg_.message_bits, cfg_.blocklength_of(l), cfg_.qos.delay_exponent,
                                        cfg_.qos.ec_threshold);
        t.eta = cfg_.qos.lagrange_multiplier;
    }
    return terms;
}

void MdpEnv::refresh_state() {
    const int K = cfg_.devices;
    const int L = cfg_.subchannels;
    state_.positions = sim_->positions();
    state_.gains.resize(static_cast<std::size_t>(K) * L);
    state_.lambdas.resize(state_.gains.size());
    state_.p_aoi.resize(state_.gains.size());
    std::vector<int> contenders(L, 0);
    for (int a : previous_.assignment)
        if (a >= 0) ++contenders[a];
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const std::size_t i = static_cast<std::size_t>(k) * L + l;
            state_.gains[i] = sim_->gain(k, l);
            state_.lambdas[i] = cfg_.lambda(k, l);
            const int c = contenders[l] + (previous_.assignment[k] == l ? 0 : 1);
            state_.p_aoi[i] = link_p_aoi(k, l, previous_.p_access[l], c, previous_.power_scale);
        }
    }
}

Eigen::VectorXd MdpEnv::observation() const {
    const int K = cfg_.devices;
    const int L = cfg_.subchannels;
    Eigen::VectorXd obs(observation_size());
    int i = 0;
    for (const auto& p : state_.positions) {
        obs[i++] = p.x / cfg_.cell_radius;
        obs[i++] = p.y / cfg_.cell_radius;
    }
    const double lambda_max = *std::max_element(state_.lambdas.begin(), state_.lambdas.end());
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) obs[i++] = snr_feature(sim_->snr(k, l, previous_.power_scale));
    for (double lam : state_.lambdas) obs[i++] = lam / lambda_max;
    for (double p : state_.p_aoi) obs[i++] = p;
    return obs;
}

drl::StepResult MdpEnv::step(int action) {
    return step(space_.decode(action));
}

drl::StepResult MdpEnv::step(const Action& action) {
    const sim::FrameAction fa = to_frame_action(action, cfg_.devices, cfg_.subchannels);
    if (steps_ >= cfg_.episode_frames) throw std::logic_error("episode already finished; call reset");
    last_terms_ = link_terms(fa);
    const double reward = reward_of(last_terms_);
    sim_->step(fa);
    previous_ = fa;
    ++steps_;
    rewards_.push_back(reward);
    refresh_state();
    return {observation(), reward, steps_ >= cfg_.episode_frames};
}

double MdpEnv::episode_metric() const {
    if (sim_->trace().records.empty()) return 1.0;
    return sim::empirical_peak_aoi_violation(sim_->trace(), cfg_.qos.peak_aoi_threshold).value;
}

}  // namespace aoi::mdp
