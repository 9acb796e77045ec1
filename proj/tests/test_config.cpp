#include <gtest/gtest.h>

#include "aoi/errors.hpp"
#include "aoi/experiment/config.hpp"

using namespace aoi;
using experiment::Json;

namespace {

Json minimal() {
    return Json::parse(R"({"scenario": {"message_bits": 100}})");
}

std::string error_field(const Json& j) {
    try {
        experiment::parse_config(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST(Config, MinimalConfigTakesDefaults) {
    const auto c = experiment::parse_config(minimal());
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.scenario.message_bits, 100.0);
    EXPECT_EQ(c.scenario.frame_duration, 0.1);
    EXPECT_EQ(c.bounds.reference_distance, 250.0);
    EXPECT_EQ(c.train.episodes, 2000);
    EXPECT_EQ(c.train_seeds.size(), 5u);
}

TEST(Config, MissingRequiredFieldIsNamed) {
    EXPECT_EQ(error_field(Json::parse(R"({"scenario": {"devices": 3}})")), "scenario.message_bits");
    EXPECT_EQ(error_field(Json::parse("{}")), "scenario.message_bits");
}

TEST(Config, UnknownKeysAreNamed) {
    auto j = minimal();
    j["extra"] = 1;
    EXPECT_EQ(error_field(j), "extra");
    j = minimal();
    j["scenario"]["devcies"] = 3;
    EXPECT_EQ(error_field(j), "scenario.devcies");
    j = minimal();
    j["train"] = {{"episodez", 3}};
    EXPECT_EQ(error_field(j), "train.episodez");
}

TEST(Config, WrongTypesAndRangesAreNamed) {
    auto j = minimal();
    j["scenario"]["devices"] = "many";
    EXPECT_EQ(error_field(j), "scenario.devices");
    j = minimal();
    j["qos"] = {{"delay_bound", 1.5}};
    EXPECT_EQ(error_field(j), "qos.delay_bound");
    j = minimal();
    j["policy"] = {{"p_access", 2.0}};
    EXPECT_EQ(error_field(j), "policy.p_access");
    j = minimal();
    j["scenario"]["po_semantics"] = "sometimes";
    EXPECT_EQ(error_field(j), "scenario.po_semantics");
    j = minimal();
    j["seed"] = -4;
    EXPECT_EQ(error_field(j), "seed");
}

TEST(Config, EchoRoundTrips) {
    auto j = minimal();
    j["seed"] = 9;
    j["scenario"]["devices"] = 6;
    j["scenario"]["subchannels"] = 2;
    j["scenario"]["blocklength"] = {200, 500};
    j["scenario"]["bandwidth"] = 10000;
    j["scenario"]["mean_snr_db"] = 3.5;
    j["train"] = {{"history", 2}, {"seeds", {4, 5}}};
    const auto c = experiment::parse_config(j);
    const Json echo = experiment::to_json(c);
    EXPECT_EQ(experiment::to_json(experiment::parse_config(echo)), echo);
    EXPECT_EQ(echo["seed"], 9);
    EXPECT_EQ(echo["train"]["seeds"], Json::array({4, 5}));
    EXPECT_EQ(echo["scenario"]["mean_snr_db"], 3.5);
}

TEST(Config, BoundContendersDefaultsToDevicesPerSubchannel) {
    auto j = minimal();
    j["scenario"]["devices"] = 50;
    j["scenario"]["subchannels"] = 4;
    EXPECT_EQ(experiment::parse_config(j).bound_contenders(), 13);
    j["bounds"] = {{"contenders", 5}};
    EXPECT_EQ(experiment::parse_config(j).bound_contenders(), 5);
}

TEST(Sweep, ParsesListsAndRanges) {
    auto s = experiment::parse_sweep("blocklength=100,200,300");
    EXPECT_EQ(s.name, "blocklength");
    EXPECT_EQ(s.values, (std::vector<double>{100, 200, 300}));
    s = experiment::parse_sweep("theta=0:1:5");
    EXPECT_EQ(s.values, (std::vector<double>{0, 0.25, 0.5, 0.75, 1.0}));
    s = experiment::parse_sweep("theta=0.001:0.1:3:log");
    ASSERT_EQ(s.values.size(), 3u);
    EXPECT_NEAR(s.values[1], 0.01, 1e-15);
    EXPECT_EQ(s.values.back(), 0.1);
}

TEST(Sweep, RejectsUnknownNamesWithList) {
    try {
        experiment::parse_sweep("bogus=1,2");
        FAIL();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        for (const auto& n : experiment::sweepable_names()) EXPECT_NE(msg.find(n), std::string::npos) << n;
    }
    EXPECT_THROW(experiment::parse_sweep("theta"), std::invalid_argument);
    EXPECT_THROW(experiment::parse_sweep("theta=1:2"), std::invalid_argument);
    EXPECT_THROW(experiment::parse_sweep("theta=0:1:3:log"), std::invalid_argument);
    EXPECT_THROW(experiment::parse_sweep("theta=a,b"), std::invalid_argument);
}

TEST(Sweep, AppliesValues) {
    auto c = experiment::parse_config(minimal());
    experiment::apply_sweep_value(c, "blocklength", 300);
    EXPECT_EQ(c.scenario.blocklength, std::vector<int>{300});
    experiment::apply_sweep_value(c, "theta", 0.02);
    EXPECT_EQ(c.scenario.qos.aoi_exponent, 0.02);
    EXPECT_THROW(experiment::apply_sweep_value(c, "blocklength", 250.5), std::invalid_argument);
}
