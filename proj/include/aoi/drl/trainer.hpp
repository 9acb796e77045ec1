#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aoi/drl/environment.hpp"
#include "aoi/drl/network.hpp"
#include "aoi/drl/replay_buffer.hpp"

namespace aoi::drl {

enum class Algorithm { ddqn, dueling };
enum class RecurrentReset { per_frame, per_episode };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a);
RecurrentReset parse_recurrent_reset(std::string_view name);
std::string_view to_string(RecurrentReset r);

struct TrainConfig {
    double beta = 0.5;           // discount
    double learning_rate = 0.01;
    double tau = 0.1;            // exploration probability
    double tau_final = -1.0;     // negative keeps tau constant
    int tau_decay_episodes = 0;  // linear decay from tau to tau_final
    double psi = 0.01;           // soft target update rate
    int episodes = 2000;
    std::size_t replay_capacity = 10000;
    int batch_size = 32;
    int warmup = 0;              // transitions stored before the first update (at least batch_size)
    int train_every = 1;         // environment steps per gradient step
    int history = 1;             // observations per state window
    std::vector<int> hidden{64, 64};
    Activation activation = Activation::relu;
    std::vector<int> value_hidden;
    std::vector<int> advantage_hidden;
    int recurrent_size = 0;      // > 0 selects the GRU approximator
    RecurrentReset recurrent_reset = RecurrentReset::per_episode;
    double grad_clip = 10.0;     // global norm; <= 0 disables
    int final_window = 100;

    void validate() const;
    double tau_at(int episode) const;
};

NetworkSpec make_spec(const TrainConfig& cfg, Algorithm algo, int observation_size, int actions);

// Uniform valid action with probability tau, otherwise the lowest-index
// maximizer among valid actions. An empty mask means all valid.
int select_action(const Eigen::VectorXd& q, const std::vector<char>& valid, double tau, Rng& rng);

// Index of the largest valid entry, lowest index on ties.
int masked_argmax(const Eigen::VectorXd& q, const std::vector<char>& valid);

// r + beta Q_target(s', argmax_a Q_online(s', a)); r alone when done.
double ddqn_target(double reward, bool done, const Eigen::VectorXd& q_next_online,
                   const Eigen::VectorXd& q_next_target, const std::vector<char>& next_valid, double beta);

struct LossGrad {
    double loss = 0.0;
    Eigen::VectorXd grad;
};

// Mean squared TD error over the batch with targets held fixed.
LossGrad loss_and_grad(const Network& online, const Network& target, const std::vector<const Transition*>& batch,
                       double beta);
// Same, reusing `grad` as the output buffer; returns the loss.
double loss_and_grad(const Network& online, const Network& target, const std::vector<const Transition*>& batch,
                     double beta, Eigen::VectorXd& grad);

struct EpisodeLog {
    int episode = 0;
    double ret = 0.0;         // discounted return
    double reward_sum = 0.0;
    double metric = 0.0;      // environment episode metric
    double loss = 0.0;        // mean minibatch loss in the episode
};

struct TrainResult {
    Network network;
    std::vector<EpisodeLog> curve;
    bool diverged = false;
    std::string diagnostic;
};

// Environment seed of training episode `episode` under master `seed`.
std::uint64_t episode_seed(std::uint64_t seed, int episode);

TrainResult train(Environment& env, const TrainConfig& cfg, Algorithm algo, std::uint64_t seed);

// Rolls a policy through episodes with the given environment seeds.
std::vector<EpisodeLog> evaluate(Environment& env, const Network& net, const TrainConfig& cfg,
                                 const std::vector<std::uint64_t>& seeds);
std::vector<EpisodeLog> random_policy(Environment& env, const TrainConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds, std::uint64_t seed);

double final_window_mean(const std::vector<EpisodeLog>& curve, int window);

// Keeps the stacked observation window (zero padded at episode start) and,
// for recurrent networks, the hidden state carried through the episode.
class Actor {
public:
    Actor(const Network& net, const TrainConfig& cfg);

    void begin(const Eigen::VectorXd& obs);
    void observe(const Eigen::VectorXd& obs);
    Eigen::VectorXd window() const;
    Eigen::VectorXd hidden() const;  // state before the window; empty for zeros
    Eigen::VectorXd q_values() const;

private:
    const Network* net_;
    const TrainConfig* cfg_;
    std::deque<Eigen::VectorXd> obs_;
    std::deque<Eigen::VectorXd> carried_;  // hidden states aligned with obs_
    Eigen::VectorXd latest_;
    long seen_ = 0;
};

}  // namespace aoi::drl
