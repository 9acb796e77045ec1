#include <gtest/gtest.h>

#include <cmath>

#include "aoi/drl/network.hpp"

using namespace aoi;
using drl::Network;
using drl::NetworkSpec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * uniform01(rng) - 1.0;
    return m;
}

NetworkSpec random_spec(Rng& rng) {
    auto pick = [&](int lo, int hi) { return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1)); };
    NetworkSpec s;
    s.input_size = pick(1, 5);
    s.window = pick(1, 3);
    s.hidden.assign(pick(0, 2), 0);
    for (int& h : s.hidden) h = pick(2, 7);
    s.outputs = pick(1, 4);
    s.activation = uniform01(rng) < 0.5 ? drl::Activation::relu : drl::Activation::tanh;
    s.dueling = uniform01(rng) < 0.5;
    if (s.dueling && uniform01(rng) < 0.5) s.value_hidden = {pick(2, 5)};
    if (s.dueling && uniform01(rng) < 0.5) s.advantage_hidden = {pick(2, 5)};
    if (uniform01(rng) < 0.3) s.recurrent_size = pick(2, 4);
    return s;
}

}  // namespace

TEST(Network, ParameterCountOfPlainMlp) {
    NetworkSpec s;
    s.input_size = 3;
    s.window = 2;
    s.hidden = {4};
    s.outputs = 2;
    Network net(s);
    EXPECT_EQ(net.parameter_count(), (6 * 4 + 4) + (4 * 2 + 2));
}

TEST(Network, InitializationIsSeededAndScaled) {
    NetworkSpec s;
    s.input_size = 16;
    s.hidden = {8};
    s.outputs = 3;
    Network a(s), b(s);
    Rng ra = make_stream(1, "init"), rb = make_stream(1, "init");
    a.initialize(ra);
    b.initialize(rb);
    EXPECT_EQ(a.params(), b.params());
    const double limit = 1.0 / std::sqrt(16.0);
    const auto& first = a.trunk_layers().front();
    for (Eigen::Index i = 0; i < first.in * first.out; ++i) EXPECT_LE(std::abs(a.params()[first.w + i]), limit);
}

TEST(Network, ForwardShapeAndBatchIndependence) {
    Rng rng = make_stream(2, "net_forward");
    for (int i = 0; i < 20; ++i) {
        Network net(random_spec(rng));
        net.initialize(rng);
        const MatrixXd x = random_matrix(net.spec().input_rows(), 4, rng);
        const MatrixXd q = net.forward(x);
        ASSERT_EQ(q.rows(), net.spec().outputs);
        ASSERT_EQ(q.cols(), 4);
        for (int c = 0; c < 4; ++c) ASSERT_TRUE(net.forward(x.col(c)).col(0).isApprox(q.col(c), 1e-12));
    }
}

TEST(Network, BackpropMatchesFiniteDifferences) {
    Rng rng = make_stream(3, "net_gradcheck");
    for (int i = 0; i < 30; ++i) {
        Network net(random_spec(rng));
        net.initialize(rng);
        const MatrixXd x = random_matrix(net.spec().input_rows(), 3, rng);
        const MatrixXd w = random_matrix(net.spec().outputs, 3, rng);
        MatrixXd h0;
        if (net.spec().recurrent()) h0 = 0.5 * random_matrix(net.spec().recurrent_size, 3, rng);
        ASSERT_LT(drl::gradient_check(net, x, w, 1e-5, h0), 1e-4) << "network " << i;
    }
}

TEST(Network, GradientBufferOverloadAgrees) {
    Rng rng = make_stream(4, "net_buffer");
    NetworkSpec s;
    s.input_size = 4;
    s.hidden = {5, 5};
    s.outputs = 3;
    s.dueling = true;
    Network net(s);
    net.initialize(rng);
    const MatrixXd x = random_matrix(4, 6, rng);
    const MatrixXd w = random_matrix(3, 6, rng);
    Network::Cache cache;
    net.forward(x, {}, cache);
    VectorXd grad = VectorXd::Constant(3, 99.0);
    net.backward(cache, w, grad);
    EXPECT_TRUE(grad.isApprox(net.backward(cache, w), 1e-14));
}

TEST(Network, DuelingOutputsCentreOnValue) {
    VectorXd a(4);
    a << 1.0, -2.0, 0.5, 4.5;
    const VectorXd q = drl::dueling_combine(3.0, a);
    EXPECT_NEAR(q.mean(), 3.0, 1e-15);
    EXPECT_NEAR(q[3] - q[1], 6.5, 1e-15);
}

TEST(Network, RecurrentStepMatchesWindowedForward) {
    Rng rng = make_stream(5, "net_gru");
    NetworkSpec one;
    one.input_size = 3;
    one.window = 1;
    one.hidden = {6};
    one.outputs = 2;
    one.recurrent_size = 4;
    NetworkSpec two = one;
    two.window = 2;
    Network a(one), b(two);
    a.initialize(rng);
    ASSERT_EQ(a.parameter_count(), b.parameter_count());
    b.params() = a.params();
    const VectorXd o1 = random_matrix(3, 1, rng).col(0);
    const VectorXd o2 = random_matrix(3, 1, rng).col(0);
    VectorXd stacked(6);
    stacked << o1, o2;
    const VectorXd h1 = a.recurrent_step(VectorXd::Zero(4), o1);
    EXPECT_TRUE(a.forward(o2, MatrixXd(h1)).isApprox(b.forward(stacked), 1e-12));
}

TEST(Network, SoftUpdateIsConvexCombination) {
    VectorXd target(3), online(3);
    target << 1.0, 2.0, 3.0;
    online << 5.0, 6.0, 7.0;
    drl::soft_update(target, online, 0.25);
    EXPECT_TRUE(target.isApprox(VectorXd::LinSpaced(3, 2.0, 4.0)));
}

TEST(Network, SpecValidation) {
    NetworkSpec s;
    s.outputs = 0;
    EXPECT_ANY_THROW(s.validate());
    s.outputs = 2;
    s.hidden = {0};
    EXPECT_ANY_THROW(s.validate());
}
