#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "aoi/fbc_channel.hpp"
#include "aoi/rng.hpp"

using namespace aoi;

TEST(Fbc, CapacityHandValues) {
    EXPECT_DOUBLE_EQ(fbc::capacity(0.0), 0.0);
    EXPECT_DOUBLE_EQ(fbc::capacity(1.0), 1.0);
    EXPECT_DOUBLE_EQ(fbc::capacity(3.0), 2.0);
    EXPECT_THROW(fbc::capacity(-1.0), std::domain_error);
}

TEST(Fbc, DispersionHandValues) {
    EXPECT_DOUBLE_EQ(fbc::dispersion(0.0), 0.0);
    EXPECT_DOUBLE_EQ(fbc::dispersion(1.0), 0.75);
    EXPECT_DOUBLE_EQ(fbc::dispersion(3.0), 1.0 - 1.0 / 16.0);
    EXPECT_LT(fbc::dispersion(1e6), 1.0);
}

TEST(Fbc, QFunctionKnownQuantiles) {
    EXPECT_DOUBLE_EQ(fbc::q_function(0.0), 0.5);
    EXPECT_NEAR(fbc::q_function(1.6448536269514722), 0.05, 1e-12);
    EXPECT_NEAR(fbc::q_function(-1.959963984540054), 0.975, 1e-12);
}

TEST(Fbc, DecodeErrorMatchesNormalApproximation) {
    // snr 1: C = 1, V = 0.75; n = 400, 300 bits -> rate 0.75.
    const double arg = (1.0 - 0.75) / std::sqrt(0.75 / 400.0);
    const double expected = 0.5 * std::erfc(arg / std::sqrt(2.0));
    EXPECT_NEAR(fbc::decode_error(1.0, 400, 300.0), expected, 1e-15);
    // Rate equal to capacity gives one half.
    EXPECT_NEAR(fbc::decode_error(3.0, 100, 200.0), 0.5, 1e-15);
}

TEST(Fbc, DecodeErrorEdgeCases) {
    EXPECT_EQ(fbc::decode_error(0.0, 100, 10.0), 1.0);
    EXPECT_THROW(fbc::decode_error(1.0, 0, 10.0), std::domain_error);
    EXPECT_THROW(fbc::decode_error(1.0, 10, 0.0), std::domain_error);
    EXPECT_THROW(fbc::decode_error(-0.5, 10, 1.0), std::domain_error);
}

TEST(Fbc, DecodeErrorMonotoneProperties) {
    Rng rng = make_stream(11, "fbc_property");
    for (int i = 0; i < 500; ++i) {
        const int n = 50 + static_cast<int>(uniform01(rng) * 600);
        const double bits = 20.0 + 300.0 * uniform01(rng);
        const double snr = 1e-3 + 50.0 * uniform01(rng);
        const double e = fbc::decode_error(snr, n, bits);
        ASSERT_GE(e, 0.0);
        ASSERT_LE(e, 1.0);
        ASSERT_LE(fbc::decode_error(snr * 1.5, n, bits), e);
        ASSERT_GE(fbc::decode_error(snr, n, bits * 1.2), e);
        // Longer blocks at the same message size lower the rate.
        ASSERT_LE(fbc::decode_error(snr, n + 50, bits), e + 1e-15);
    }
}

TEST(Fbc, SinrAddsInterferenceToNoise) {
    fbc::ChannelModel m;
    m.noise_power = 1e-3;
    m.path_loss_exponent = 2.0;
    fbc::LinkState target{{10.0, 0.0}, 2.0, 1.0};  // received 1 * 10^-2 * 2 = 0.02
    std::vector<fbc::LinkState> others{{{0.0, 20.0}, 1.0, 4.0}};  // 4 / 400 = 0.01
    EXPECT_NEAR(fbc::sinr(target, {}, m), 20.0, 1e-12);
    EXPECT_NEAR(fbc::sinr(target, others, m), 0.02 / 0.011, 1e-12);
}

TEST(Fbc, ResourceBlockCount) {
    fbc::ChannelModel m;
    m.frame_duration = 0.1;
    m.subchannel_bandwidth = 1e5;
    m.blocklength = 400;
    EXPECT_EQ(fbc::rb_count(m), 25);
    m.subchannel_bandwidth = 3e3;
    m.blocklength = 100;
    EXPECT_EQ(fbc::rb_count(m), 3);
    m.blocklength = 301;
    EXPECT_THROW(fbc::rb_count(m), std::domain_error);
}
