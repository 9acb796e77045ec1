#include "aoi/drl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace aoi::drl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Algorithm parse_algorithm(std::string_view name) {
    if (name == "ddqn") return Algorithm::ddqn;
    if (name == "dueling") return Algorithm::dueling;
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (expected ddqn or dueling)");
}

std::string_view to_string(Algorithm a) {
    return a == Algorithm::ddqn ? "ddqn" : "dueling";
}

RecurrentReset parse_recurrent_reset(std::string_view name) {
    if (name == "per_frame") return RecurrentReset::per_frame;
    if (name == "per_episode") return RecurrentReset::per_episode;
    throw std::invalid_argument("unknown recurrent_reset '" + std::string(name) +
                                "' (expected per_frame or per_episode)");
}

std::string_view to_string(RecurrentReset r) {
    return r == RecurrentReset::per_frame ? "per_frame" : "per_episode";
}

void TrainConfig::validate() const {
    if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
    if (tau_final > 1.0) throw std::invalid_argument("tau_final must be <= 1");
    if (tau_decay_episodes < 0) throw std::invalid_argument("tau_decay_episodes must be >= 0");
    if (!(psi > 0.0 && psi < 1.0)) throw std::invalid_argument("psi must lie in (0, 1)");
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (replay_capacity < 1) throw std::invalid_argument("replay_capacity must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (static_cast<std::size_t>(batch_size) > replay_capacity)
        throw std::invalid_argument("batch_size must not exceed replay_capacity");
    if (warmup < 0) throw std::invalid_argument("warmup must be >= 0");
    if (train_every < 1) throw std::invalid_argument("train_every must be >= 1");
    if (history < 1) throw std::invalid_argument("history must be >= 1");
    if (recurrent_size < 0) throw std::invalid_argument("recurrent_size must be >= 0");
    if (final_window < 1) throw std::invalid_argument("final_window must be >= 1");
}

double TrainConfig::tau_at(int episode) const {
    if (tau_final < 0.0 || tau_decay_episodes == 0) return tau;
    const double frac = std::min(1.0, static_cast<double>(episode) / tau_decay_episodes);
    return tau + (tau_final - tau) * frac;
}

NetworkSpec make_spec(const TrainConfig& cfg, Algorithm algo, int observation_size, int actions) {
    NetworkSpec s;
    s.input_size = observation_size;
    s.window = cfg.history;
    s.hidden = cfg.hidden;
    s.outputs = actions;
    s.activation = cfg.activation;
    s.dueling = algo == Algorithm::dueling;
    s.value_hidden = cfg.value_hidden;
    s.advantage_hidden = cfg.advantage_hidden;
    s.recurrent_size = cfg.recurrent_size;
    return s;
}

int masked_argmax(const VectorXd& q, const std::vector<char>& valid) {
    int best = -1;
    double best_q = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        if (!valid.empty() && !valid[a]) continue;
        if (best < 0 || q[a] > best_q) {
            best = static_cast<int>(a);
            best_q = q[a];
        }
    }
    if (best < 0) throw std::invalid_argument("no valid action");
    return best;
}

int select_action(const VectorXd& q, const std::vector<char>& valid, double tau, Rng& rng) {
    if (q.size() == 0) throw std::invalid_argument("empty Q-vector");
    if (uniform01(rng) < tau) {
        std::vector<int> allowed;
        for (Eigen::Index a = 0; a < q.size(); ++a)
            if (valid.empty() || valid[a]) allowed.push_back(static_cast<int>(a));
        if (allowed.empty()) throw std::invalid_argument("no valid action");
        const auto i = std::min(static_cast<std::size_t>(uniform01(rng) * allowed.size()), allowed.size() - 1);
        return allowed[i];
    }
    return masked_argmax(q, valid);
}

double ddqn_target(double reward, bool done, const VectorXd& q_next_online, const VectorXd& q_next_target,
                   const std::vector<char>& next_valid, double beta) {
    if (done) return reward;
    return reward + beta * q_next_target[masked_argmax(q_next_online, next_valid)];
}

LossGrad loss_and_grad(const Network& online, const Network& target, const std::vector<const Transition*>& batch,
                       double beta) {
    LossGrad out;
    out.loss = loss_and_grad(online, target, batch, beta, out.grad);
    return out;
}

double loss_and_grad(const Network& online, const Network& target, const std::vector<const Transition*>& batch,
                     double beta, VectorXd& grad) {
    if (batch.empty()) throw std::invalid_argument("empty minibatch");
    const auto B = static_cast<Eigen::Index>(batch.size());
    const int rows = online.spec().input_rows();
    MatrixXd x(rows, B), xn(rows, B), h, hn;
    const bool recurrent = online.spec().recurrent();
    const int H = online.spec().recurrent_size;
    if (recurrent) {
        h = MatrixXd::Zero(H, B);
        hn = MatrixXd::Zero(H, B);
    }
    for (Eigen::Index i = 0; i < B; ++i) {
        const Transition& t = *batch[i];
        x.col(i) = t.state;
        xn.col(i) = t.next_state;
        if (recurrent && t.hidden.size()) h.col(i) = t.hidden;
        if (recurrent && t.next_hidden.size()) hn.col(i) = t.next_hidden;
    }
    Network::Cache cache;
    const MatrixXd q = online.forward(x, h, cache);
    const MatrixXd qn_online = online.forward(xn, hn);
    const MatrixXd qn_target = target.forward(xn, hn);

    MatrixXd d = MatrixXd::Zero(q.rows(), B);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < B; ++i) {
        const Transition& t = *batch[i];
        const double y = ddqn_target(t.reward, t.done, qn_online.col(i), qn_target.col(i), t.next_valid, beta);
        const double err = q(t.action, i) - y;
        loss += err * err;
        d(t.action, i) = 2.0 * err / B;
    }
    online.backward(cache, d, grad);
    return loss / B;
}

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
    return derive_seed(seed, "episode", static_cast<std::uint64_t>(episode));
}

Actor::Actor(const Network& net, const TrainConfig& cfg) : net_(&net), cfg_(&cfg) {}

void Actor::begin(const VectorXd& obs) {
    obs_.assign(cfg_->history, VectorXd::Zero(obs.size()));
    carried_.clear();
    latest_ = net_->spec().recurrent() ? VectorXd::Zero(net_->spec().recurrent_size) : VectorXd();
    seen_ = 0;
    observe(obs);
}

void Actor::observe(const VectorXd& obs) {
    if (net_->spec().recurrent() && cfg_->recurrent_reset == RecurrentReset::per_episode) {
        carried_.push_back(latest_);
        if (static_cast<int>(carried_.size()) > cfg_->history) carried_.pop_front();
        latest_ = net_->recurrent_step(latest_, obs);
    }
    obs_.push_back(obs);
    obs_.pop_front();
    ++seen_;
}

VectorXd Actor::window() const {
    const auto n = obs_.front().size();
    VectorXd w(n * static_cast<Eigen::Index>(obs_.size()));
    for (std::size_t i = 0; i < obs_.size(); ++i) w.segment(static_cast<Eigen::Index>(i) * n, n) = obs_[i];
    return w;
}

VectorXd Actor::hidden() const {
    if (!net_->spec().recurrent() || cfg_->recurrent_reset != RecurrentReset::per_episode) return {};
    if (seen_ < cfg_->history) return {};
    return carried_.front();
}

VectorXd Actor::q_values() const {
    const VectorXd h = hidden();
    return net_->forward(window(), h.size() ? MatrixXd(h) : MatrixXd()).col(0);
}

namespace {

double discounted(const std::vector<double>& rewards, double beta) {
    double sum = 0.0;
    double w = beta;
    for (double r : rewards) {
        sum += w * r;
        w *= beta;
    }
    return sum;
}

bool has_invalid(const std::vector<char>& mask) {
    return std::find(mask.begin(), mask.end(), 0) != mask.end();
}

}  // namespace

TrainResult train(Environment& env, const TrainConfig& cfg, Algorithm algo, std::uint64_t seed) {
    cfg.validate();
    TrainResult result;
    Network online(make_spec(cfg, algo, env.observation_size(), env.action_count()));
    Rng init_rng = make_stream(seed, "net_init");
    online.initialize(init_rng);
    Network target = online;
    Rng explore_rng = make_stream(seed, "exploration");
    Rng replay_rng = make_stream(seed, "replay");
    ReplayBuffer buffer(cfg.replay_capacity);
    VectorXd checkpoint = online.params();
    const std::size_t ready = std::max<std::size_t>(cfg.batch_size, cfg.warmup);
    long steps = 0;
    VectorXd grad;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        Actor actor(online, cfg);
        actor.begin(env.reset(episode_seed(seed, ep)));
        const double tau = cfg.tau_at(ep);
        std::vector<double> rewards;
        double loss_sum = 0.0;
        int updates = 0;
        bool done = false;
        while (!done) {
            const std::vector<char> valid = env.valid_actions();
            Transition t;
            t.state = actor.window();
            t.hidden = actor.hidden();
            t.action = select_action(actor.q_values(), valid, tau, explore_rng);
            StepResult sr = env.step(t.action);
            actor.observe(sr.observation);
            t.reward = sr.reward;
            t.done = sr.done;
            t.next_state = actor.window();
            t.next_hidden = actor.hidden();
            t.step = steps;
            if (!sr.done) {
                std::vector<char> next_valid = env.valid_actions();
                if (has_invalid(next_valid)) t.next_valid = std::move(next_valid);
            }
            rewards.push_back(sr.reward);
            buffer.push(std::move(t));
            ++steps;
            done = sr.done;

            if (buffer.size() < ready || steps % cfg.train_every != 0) continue;
            const auto idx = buffer.sample_indices(cfg.batch_size, replay_rng);
            std::vector<const Transition*> batch;
            batch.reserve(idx.size());
            for (auto i : idx) batch.push_back(&buffer.at(i));
            const double loss = loss_and_grad(online, target, batch, cfg.beta, grad);
            if (!std::isfinite(loss) || !grad.allFinite()) {
                online.params() = checkpoint;
                result.network = online;
                result.diverged = true;
                result.diagnostic = fmt::format("non-finite loss at episode {} step {}; {}", ep, steps,
                                                ep == 0 ? std::string("restored the initial weights")
                                                        : fmt::format("restored weights from episode {}", ep - 1));
                return result;
            }
            const double norm = grad.norm();
            if (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) grad *= cfg.grad_clip / norm;
            online.params() -= cfg.learning_rate * grad;
            soft_update(target.params(), online.params(), cfg.psi);
            loss_sum += loss;
            ++updates;
        }
        EpisodeLog log;
        log.episode = ep;
        log.ret = discounted(rewards, cfg.beta);
        for (double r : rewards) log.reward_sum += r;
        log.metric = env.episode_metric();
        log.loss = updates ? loss_sum / updates : 0.0;
        result.curve.push_back(log);
        checkpoint = online.params();
    }
    result.network = online;
    return result;
}

std::vector<EpisodeLog> evaluate(Environment& env, const Network& net, const TrainConfig& cfg,
                                 const std::vector<std::uint64_t>& seeds) {
    std::vector<EpisodeLog> out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        Actor actor(net, cfg);
        actor.begin(env.reset(seeds[i]));
        std::vector<double> rewards;
        bool done = false;
        while (!done) {
            const StepResult sr = env.step(masked_argmax(actor.q_values(), env.valid_actions()));
            actor.observe(sr.observation);
            rewards.push_back(sr.reward);
            done = sr.done;
        }
        EpisodeLog log;
        log.episode = static_cast<int>(i);
        log.ret = discounted(rewards, cfg.beta);
        for (double r : rewards) log.reward_sum += r;
        log.metric = env.episode_metric();
        out.push_back(log);
    }
    return out;
}

std::vector<EpisodeLog> random_policy(Environment& env, const TrainConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds, std::uint64_t seed) {
    Rng rng = make_stream(seed, "random_policy");
    const VectorXd zeros = VectorXd::Zero(env.action_count());
    std::vector<EpisodeLog> out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        env.reset(seeds[i]);
        std::vector<double> rewards;
        bool done = false;
        while (!done) {
            const StepResult sr = env.step(select_action(zeros, env.valid_actions(), 1.0, rng));
            rewards.push_back(sr.reward);
            done = sr.done;
        }
        EpisodeLog log;
        log.episode = static_cast<int>(i);
        log.ret = discounted(rewards, cfg.beta);
        for (double r : rewards) log.reward_sum += r;
        log.metric = env.episode_metric();
        out.push_back(log);
    }
    return out;
}

double final_window_mean(const std::vector<EpisodeLog>& curve, int window) {
    if (curve.empty()) throw std::domain_error("empty learning curve");
    const std::size_t n = std::min<std::size_t>(curve.size(), static_cast<std::size_t>(window));
    double s = 0.0;
    for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i].ret;
    return s / n;
}

}  // namespace aoi::drl
