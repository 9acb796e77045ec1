#include <gtest/gtest.h>

#include <set>

#include "aoi/drl/replay_buffer.hpp"

using namespace aoi;
using drl::ReplayBuffer;
using drl::Transition;

Transition numbered(int i) {
    Transition t;
    t.action = i;
    t.step = i;
    return t;
}

TEST(ReplayBuffer, KeepsNewestOnceFull) {
    ReplayBuffer b(4);
    for (int i = 0; i < 10; ++i) b.push(numbered(i));
    ASSERT_EQ(b.size(), 4u);
    EXPECT_EQ(b.capacity(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(b.at(i).action, 6 + static_cast<int>(i));
    EXPECT_THROW(b.at(4), std::out_of_range);
}

TEST(ReplayBuffer, SamplesDistinctIndices) {
    ReplayBuffer b(50);
    for (int i = 0; i < 30; ++i) b.push(numbered(i));
    Rng rng = make_stream(1, "replay_test");
    for (int rep = 0; rep < 200; ++rep) {
        const auto idx = b.sample_indices(12, rng);
        ASSERT_EQ(idx.size(), 12u);
        std::set<std::size_t> s(idx.begin(), idx.end());
        ASSERT_EQ(s.size(), 12u);
        for (auto i : idx) ASSERT_LT(i, 30u);
    }
    EXPECT_EQ(b.sample_indices(30, rng).size(), 30u);
    EXPECT_THROW(b.sample_indices(31, rng), std::invalid_argument);
}

TEST(ReplayBuffer, SamplingIsRoughlyUniform) {
    ReplayBuffer b(10);
    for (int i = 0; i < 10; ++i) b.push(numbered(i));
    Rng rng = make_stream(2, "replay_uniform");
    std::vector<int> hits(10, 0);
    const int reps = 20000;
    for (int rep = 0; rep < reps; ++rep)
        for (auto i : b.sample_indices(3, rng)) ++hits[i];
    // Each index is drawn with probability 3/10 per sample.
    const double mean = reps * 0.3;
    const double sd = std::sqrt(reps * 0.3 * 0.7);
    for (int h : hits) EXPECT_NEAR(h, mean, 4.0 * sd);
}

TEST(ReplayBuffer, RejectsZeroCapacity) {
    EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
}
