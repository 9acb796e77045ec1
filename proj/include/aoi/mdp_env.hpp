#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "aoi/drl/environment.hpp"
#include "aoi/simulator.hpp"

namespace aoi::mdp {

enum class ActionMode { enumerate, candidates };

ActionMode parse_action_mode(std::string_view name);
std::string_view to_string(ActionMode m);

struct ActionSpaceConfig {
    ActionMode mode = ActionMode::enumerate;
    std::vector<double> p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    bool per_subchannel_threshold = true;  // otherwise one threshold shared by all subchannels
    bool require_assignment = false;       // every device must hold a subchannel
    int candidate_cap = 64;                // patterns kept in candidates mode
    std::vector<double> power_levels;      // multipliers on the configured power; empty excludes power
    std::uint64_t candidate_seed = 0;

    void validate() const;
};

// Subchannel allocation b (devices x subchannels, row major) plus thresholds.
struct Action {
    std::vector<std::uint8_t> b;
    std::vector<double> p_access;
    double power_scale = 1.0;
};

// Throws std::invalid_argument when a device holds more than one subchannel,
// a flag is not 0/1, or a threshold lies outside [0, 1].
sim::FrameAction to_frame_action(const Action& a, int devices, int subchannels);
Action from_frame_action(const sim::FrameAction& a, int subchannels);

class ActionSpace {
public:
    ActionSpace(const ActionSpaceConfig& cfg, int devices, int subchannels);

    long size() const;
    Action decode(long index) const;
    sim::FrameAction decode_frame(long index) const;
    const std::vector<std::vector<int>>& patterns() const { return patterns_; }
    long threshold_combinations() const { return thresholds_; }
    long power_options() const;

    // Closed-form count of the enumerated space.
    static long enumerated_size(int devices, int subchannels, const ActionSpaceConfig& cfg);

private:
    ActionSpaceConfig cfg_;
    int devices_;
    int subchannels_;
    std::vector<std::vector<int>> patterns_;
    long thresholds_ = 1;
};

struct State {
    std::vector<fbc::Position> positions;
    std::vector<double> gains;    // devices x subchannels
    std::vector<double> lambdas;  // devices x subchannels
    std::vector<double> p_aoi;    // devices x subchannels, analytical bound per link
};

// Contribution of one device to the per-step reward.
struct LinkTerm {
    int device = 0;
    int subchannel = -1;  // -1 when unassigned
    double p_aoi = 1.0;
    double c1 = 0.0;      // constraint value, used only when assigned
    double eta = 0.0;
};

double reward_of(std::span<const LinkTerm> terms);

// Sum over mu = 1..N of beta^mu R(mu).
double discounted_return(std::span<const double> rewards, double beta);

class MdpEnv : public drl::Environment {
public:
    MdpEnv(sim::ScenarioConfig scenario, const ActionSpaceConfig& actions);

    int observation_size() const override;
    int action_count() const override { return static_cast<int>(space_.size()); }
    Eigen::VectorXd reset(std::uint64_t seed) override;
    drl::StepResult step(int action) override;
    double episode_metric() const override;

    drl::StepResult step(const Action& action);

    const State& state() const { return state_; }
    const ActionSpace& action_space() const { return space_; }
    const sim::ScenarioConfig& scenario() const { return cfg_; }
    const sim::Simulator& simulator() const { return *sim_; }
    long steps() const { return steps_; }
    const std::vector<LinkTerm>& last_terms() const { return last_terms_; }
    std::vector<double> episode_rewards() const { return rewards_; }

    // Reward terms for taking `action` in the current state.
    std::vector<LinkTerm> link_terms(const sim::FrameAction& action) const;
    Eigen::VectorXd observation() const;

private:
    double link_p_aoi(int k, int l, double p_access, int contenders, double power_scale) const;
    void refresh_state();

    sim::ScenarioConfig cfg_;
    ActionSpace space_;
    std::unique_ptr<sim::Simulator> sim_;
    State state_;
    sim::FrameAction previous_;
    std::vector<LinkTerm> last_terms_;
    std::vector<double> rewards_;
    long steps_ = 0;
};

}  // namespace aoi::mdp
