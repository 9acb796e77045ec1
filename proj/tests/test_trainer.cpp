#include <gtest/gtest.h>

#include <cmath>

#include "aoi/drl/trainer.hpp"

using namespace aoi;
using Eigen::VectorXd;

namespace {

// Contextual bandit: the observation is a one-hot context, the rewarded
// action equals the context. Episodes are `length` steps long.
class ToyEnv : public drl::Environment {
public:
    explicit ToyEnv(int length = 5, double scale = 1.0) : length_(length), scale_(scale) {}
    int observation_size() const override { return 3; }
    int action_count() const override { return 3; }
    VectorXd reset(std::uint64_t seed) override {
        rng_ = Rng{seed};
        t_ = 0;
        hits_ = 0;
        draw();
        return obs();
    }
    drl::StepResult step(int action) override {
        const double r = (action == context_ ? 1.0 : 0.0) * scale_;
        hits_ += action == context_;
        ++t_;
        draw();
        return {obs(), r, t_ >= length_};
    }
    double episode_metric() const override { return 1.0 - static_cast<double>(hits_) / std::max(t_, 1); }

private:
    void draw() { context_ = static_cast<int>(uniform01(rng_) * 3); }
    VectorXd obs() const {
        VectorXd o = VectorXd::Zero(3);
        o[context_] = 1.0;
        return o;
    }
    int length_;
    double scale_;
    Rng rng_{0};
    int t_ = 0;
    int hits_ = 0;
    int context_ = 0;
};

drl::TrainConfig toy_config() {
    drl::TrainConfig c;
    c.episodes = 300;
    c.hidden = {16};
    c.learning_rate = 0.05;
    c.tau = 1.0;
    c.tau_final = 0.0;
    c.tau_decay_episodes = 200;
    c.batch_size = 16;
    c.replay_capacity = 2000;
    c.final_window = 50;
    return c;
}

}  // namespace

TEST(Trainer, MaskedArgmaxPrefersLowestValidIndex) {
    VectorXd q(4);
    q << 1.0, 3.0, 3.0, 2.0;
    EXPECT_EQ(drl::masked_argmax(q, {}), 1);
    EXPECT_EQ(drl::masked_argmax(q, {1, 0, 1, 1}), 2);
    EXPECT_EQ(drl::masked_argmax(q, {1, 0, 0, 1}), 3);
}

TEST(Trainer, SelectActionExploresOnlyValidActions) {
    VectorXd q = VectorXd::Zero(4);
    q[0] = 5.0;
    Rng rng = make_stream(1, "select");
    std::vector<int> hits(4, 0);
    for (int i = 0; i < 30000; ++i) ++hits[drl::select_action(q, {1, 1, 0, 1}, 1.0, rng)];
    EXPECT_EQ(hits[2], 0);
    for (int a : {0, 1, 3}) EXPECT_NEAR(hits[a], 10000, 400);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(drl::select_action(q, {}, 0.0, rng), 0);
}

TEST(Trainer, DoubleDqnTargetUsesOnlineArgmaxAndTargetValue) {
    VectorXd online(3), target(3);
    online << 0.1, 0.9, 0.5;
    target << 10.0, -2.0, 4.0;
    EXPECT_DOUBLE_EQ(drl::ddqn_target(1.0, false, online, target, {}, 0.5), 1.0 + 0.5 * -2.0);
    EXPECT_DOUBLE_EQ(drl::ddqn_target(1.0, false, online, target, {1, 0, 1}, 0.5), 1.0 + 0.5 * 4.0);
    EXPECT_DOUBLE_EQ(drl::ddqn_target(1.0, true, online, target, {}, 0.5), 1.0);
}

TEST(Trainer, LossGradientMatchesFiniteDifferences) {
    Rng rng = make_stream(2, "loss_grad");
    drl::NetworkSpec s;
    s.input_size = 3;
    s.hidden = {5};
    s.outputs = 3;
    s.activation = drl::Activation::tanh;
    drl::Network online(s);
    online.initialize(rng);
    drl::Network target(s);
    target.initialize(rng);
    std::vector<drl::Transition> items(6);
    for (auto& t : items) {
        t.state = VectorXd::Random(3);
        t.next_state = VectorXd::Random(3);
        t.action = static_cast<int>(uniform01(rng) * 3);
        t.reward = uniform01(rng);
        t.done = uniform01(rng) < 0.3;
    }
    std::vector<const drl::Transition*> batch;
    for (const auto& t : items) batch.push_back(&t);
    const auto lg = drl::loss_and_grad(online, target, batch, 0.5);

    // The target is held fixed: perturb only the Q(s, a) evaluation.
    std::vector<double> y;
    for (const auto& t : items) {
        y.push_back(drl::ddqn_target(t.reward, t.done, online.forward(t.next_state).col(0),
                                     target.forward(t.next_state).col(0), {}, 0.5));
    }
    auto loss_at = [&](const drl::Network& n) {
        double l = 0.0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double e = n.forward(items[i].state)(items[i].action, 0) - y[i];
            l += e * e;
        }
        return l / items.size();
    };
    EXPECT_NEAR(lg.loss, loss_at(online), 1e-12);
    drl::Network probe = online;
    for (Eigen::Index i = 0; i < probe.parameter_count(); ++i) {
        const double orig = probe.params()[i];
        probe.params()[i] = orig + 1e-6;
        const double up = loss_at(probe);
        probe.params()[i] = orig - 1e-6;
        const double down = loss_at(probe);
        probe.params()[i] = orig;
        ASSERT_NEAR(lg.grad[i], (up - down) / 2e-6, 1e-6);
    }
}

TEST(Trainer, ExplorationSchedule) {
    drl::TrainConfig c;
    c.tau = 1.0;
    c.tau_final = 0.2;
    c.tau_decay_episodes = 10;
    EXPECT_DOUBLE_EQ(c.tau_at(0), 1.0);
    EXPECT_DOUBLE_EQ(c.tau_at(5), 0.6);
    EXPECT_DOUBLE_EQ(c.tau_at(50), 0.2);
    c.tau_final = -1.0;
    EXPECT_DOUBLE_EQ(c.tau_at(50), 1.0);
}

TEST(Trainer, ConfigValidation) {
    drl::TrainConfig c;
    c.beta = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.batch_size = 64;
    c.replay_capacity = 32;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.psi = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Trainer, LearnsToyBanditAndIsReproducible) {
    ToyEnv env;
    const auto cfg = toy_config();
    for (auto algo : {drl::Algorithm::ddqn, drl::Algorithm::dueling}) {
        const auto a = drl::train(env, cfg, algo, 3);
        ASSERT_FALSE(a.diverged) << a.diagnostic;
        ASSERT_EQ(a.curve.size(), 300u);
        std::vector<std::uint64_t> seeds;
        for (int i = 0; i < 50; ++i) seeds.push_back(1000 + i);
        const auto greedy = drl::evaluate(env, a.network, cfg, seeds);
        const auto random = drl::random_policy(env, cfg, seeds, 3);
        EXPECT_GT(drl::final_window_mean(greedy, 50), drl::final_window_mean(random, 50));
        double misses = 0.0;
        for (const auto& e : greedy) misses += e.metric;
        EXPECT_LT(misses / greedy.size(), 0.05);

        const auto b = drl::train(env, cfg, algo, 3);
        ASSERT_EQ(a.curve.size(), b.curve.size());
        for (std::size_t i = 0; i < a.curve.size(); ++i) {
            ASSERT_EQ(a.curve[i].ret, b.curve[i].ret);
            ASSERT_EQ(a.curve[i].loss, b.curve[i].loss);
        }
        EXPECT_EQ(a.network.params(), b.network.params());
    }
}

TEST(Trainer, RecurrentModeTrains) {
    ToyEnv env;
    auto cfg = toy_config();
    cfg.episodes = 60;
    cfg.history = 2;
    cfg.recurrent_size = 4;
    for (auto reset : {drl::RecurrentReset::per_frame, drl::RecurrentReset::per_episode}) {
        cfg.recurrent_reset = reset;
        const auto r = drl::train(env, cfg, drl::Algorithm::ddqn, 1);
        EXPECT_FALSE(r.diverged);
        EXPECT_EQ(r.curve.size(), 60u);
    }
}

TEST(Trainer, DivergenceIsReportedWithPartialCurve) {
    ToyEnv env(5, 1e200);
    auto cfg = toy_config();
    cfg.grad_clip = 0.0;
    const auto r = drl::train(env, cfg, drl::Algorithm::ddqn, 1);
    EXPECT_TRUE(r.diverged);
    EXPECT_FALSE(r.diagnostic.empty());
    EXPECT_LT(r.curve.size(), 300u);
    EXPECT_TRUE(r.network.params().allFinite());
}

TEST(Trainer, DiscountedReturnInCurve) {
    ToyEnv env(3);
    auto cfg = toy_config();
    cfg.episodes = 1;
    cfg.beta = 0.5;
    const auto r = drl::train(env, cfg, drl::Algorithm::ddqn, 5);
    const auto& log = r.curve.front();
    // Rewards are 0/1, so the discounted return is a sum of distinct powers of beta.
    EXPECT_GE(log.ret, 0.0);
    EXPECT_LE(log.ret, 0.5 + 0.25 + 0.125);
    EXPECT_LE(log.reward_sum, 3.0);
}

TEST(Trainer, FinalWindowMean) {
    std::vector<drl::EpisodeLog> c(10);
    for (int i = 0; i < 10; ++i) c[i].ret = i;
    EXPECT_DOUBLE_EQ(drl::final_window_mean(c, 4), (6 + 7 + 8 + 9) / 4.0);
    EXPECT_DOUBLE_EQ(drl::final_window_mean(c, 100), 4.5);
}
