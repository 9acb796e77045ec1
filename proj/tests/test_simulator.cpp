#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "aoi/errors.hpp"
#include "aoi/simulator.hpp"

using namespace aoi;
using sim::ScenarioConfig;

namespace {

ScenarioConfig small() {
    ScenarioConfig s;
    s.devices = 4;
    s.subchannels = 2;
    s.blocklength = {400};
    s.bandwidth = {12001};  // 3 RBs
    s.mean_snr_db = 6.0;
    s.arrival = {0.4};
    s.p_access = {0.8};
    s.frames = 3000;
    return s;
}

std::string field_of(const ScenarioConfig& s) {
    try {
        s.validate();
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST(Simulator, ValidationNamesTheField) {
    auto s = small();
    s.devices = 0;
    EXPECT_EQ(field_of(s), "scenario.devices");
    s = small();
    s.arrival = {1.0, 2.0, 3.0};
    EXPECT_EQ(field_of(s), "scenario.arrival");
    s = small();
    s.p_access = {1.5};
    EXPECT_EQ(field_of(s), "policy.p_access");
    s = small();
    s.assignment = {0, 1, 2, 0};
    EXPECT_EQ(field_of(s), "policy.assignment");
    s = small();
    s.blocklength = {5000};
    EXPECT_EQ(field_of(s), "scenario.blocklength");
    s = small();
    s.initial_backlog = -1;
    EXPECT_EQ(field_of(s), "simulation.initial_backlog");
    EXPECT_EQ(field_of(small()), "");
}

TEST(Simulator, SameSeedSameTrace) {
    const auto a = sim::run(small(), 42);
    const auto b = sim::run(small(), 42);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].device, b.records[i].device);
        EXPECT_EQ(a.records[i].generation_time, b.records[i].generation_time);
        EXPECT_EQ(a.records[i].peak_aoi, b.records[i].peak_aoi);
    }
    EXPECT_EQ(a.collisions_per_frame, b.collisions_per_frame);
    const auto c = sim::run(small(), 43);
    EXPECT_NE(a.collisions_per_frame, c.collisions_per_frame);
}

TEST(Simulator, PacketsAreConserved) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto s = small();
        s.arrival = {0.05 + 0.1 * seed};
        const auto t = sim::run(s, seed);
        long delivered = 0;
        for (int k = 0; k < s.devices; ++k) {
            EXPECT_EQ(t.devices[k].arrivals, t.devices[k].deliveries + t.final_queue[k]);
            delivered += t.devices[k].deliveries;
        }
        EXPECT_EQ(delivered, static_cast<long>(t.records.size()));
    }
}

TEST(Simulator, RecordsAreInternallyConsistent) {
    const auto s = small();
    const auto t = sim::run(s, 7);
    ASSERT_FALSE(t.records.empty());
    for (const auto& r : t.records) {
        ASSERT_GE(r.service_frames, 1);
        ASSERT_GE(r.delay_frames, r.service_frames - 1);
        ASSERT_GE(r.delivery_time, r.generation_time);
        ASSERT_NEAR(r.peak_aoi, r.interarrival + r.service_frames * s.frame_duration, 1e-9);
        ASSERT_EQ(r.subchannel, r.device % s.subchannels);
    }
}

TEST(Simulator, LoneErrorFreeDeviceDeliversEveryBackloggedFrame) {
    ScenarioConfig s;
    s.devices = 1;
    s.subchannels = 1;
    s.decode_error_override = 0.0;
    s.arrival = {0.3};
    s.frames = 2000;
    const auto t = sim::run(s, 3);
    EXPECT_EQ(t.devices[0].deliveries, t.devices[0].backlogged_frames);
    EXPECT_EQ(t.devices[0].collisions, 0);
    for (const auto& r : t.records) EXPECT_EQ(r.service_frames, 1);
}

TEST(Simulator, CertainDecodeFailureDeliversNothing) {
    auto s = small();
    s.decode_error_override = 1.0;
    const auto t = sim::run(s, 1);
    EXPECT_TRUE(t.records.empty());
    EXPECT_THROW(sim::empirical_peak_aoi_violation(t, 1.0), std::domain_error);
}

TEST(Simulator, ZeroThresholdBarsEveryAttempt) {
    auto s = small();
    s.p_access = {0.0};
    const auto t = sim::run(s, 1);
    for (const auto& d : t.devices) EXPECT_EQ(d.attempts, 0);
}

TEST(Simulator, TaggedAccessMatchesClosedFormWhenSaturated) {
    ScenarioConfig s;
    s.devices = 5;
    s.subchannels = 1;
    s.bandwidth = {8001};  // 2 RBs
    s.blocklength = {400};
    s.p_access = {0.5};
    s.decode_error_override = 0.0;
    s.initial_backlog = 100000;
    s.record_queues = false;
    s.frames = 30000;
    const auto t = sim::run(s, 9);
    const auto e = sim::empirical_access_success(t, 0);
    const double closed = access::access_success_prob({0.5, 2, 5});
    EXPECT_NEAR(t.tagged[0].expected_sum / t.tagged[0].attempts, closed, 1e-12);
    EXPECT_LE(std::abs(e.value - closed), 3.0 * e.std_error);
}

TEST(Simulator, TinyRunIsFast) {
    ScenarioConfig s;
    s.frames = 10;
    const auto start = std::chrono::steady_clock::now();
    const auto t = sim::run(s, 1);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1.0);
    EXPECT_EQ(t.frames, 10);
    EXPECT_EQ(t.queue_lengths.size(), 10u);
}

TEST(Simulator, TargetUpdatesStopsEarly) {
    auto s = small();
    s.frames = 1000000;
    s.target_updates = 500;
    const auto t = sim::run(s, 2);
    EXPECT_GE(t.records.size(), 500u);
    EXPECT_LT(t.frames, 1000000);
}

TEST(Simulator, RejectsInvalidActions) {
    sim::Simulator simulator(small(), 1);
    auto a = sim::static_action(simulator.config());
    a.assignment[0] = 2;
    EXPECT_THROW(simulator.step(a), std::invalid_argument);
    a = sim::static_action(simulator.config());
    a.p_access = {0.5};
    EXPECT_THROW(simulator.step(a), std::invalid_argument);
    a = sim::static_action(simulator.config());
    a.p_access[1] = -0.1;
    EXPECT_THROW(simulator.step(a), std::invalid_argument);
}

TEST(Simulator, PowerInversionHitsTargetMeanSnr) {
    auto s = small();
    s.mean_snr_db = 3.0;
    sim::Simulator simulator(s, 5);
    const double target = std::pow(10.0, 0.3);
    for (int k = 0; k < s.devices; ++k) {
        const auto& p = simulator.positions()[k];
        const double d = std::hypot(p.x, p.y);
        const double mean = simulator.power(k, 0) * std::pow(d, -s.path_loss_exponent) * s.fading_mean / s.noise_power;
        EXPECT_NEAR(mean, target, 1e-9 * target);
    }
}

TEST(Simulator, BinomialEstimate) {
    const auto e = sim::binomial_estimate(3, 10);
    EXPECT_DOUBLE_EQ(e.value, 0.3);
    EXPECT_NEAR(e.std_error, std::sqrt(0.3 * 0.7 / 10.0), 1e-15);
    EXPECT_EQ(e.count, 10);
    EXPECT_THROW(sim::binomial_estimate(0, 0), std::domain_error);
}
