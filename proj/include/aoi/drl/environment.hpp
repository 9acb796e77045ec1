#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace aoi::drl {

struct StepResult {
    Eigen::VectorXd observation;
    double reward = 0.0;
    bool done = false;
};

// Episodic environment with a finite action set.
class Environment {
public:
    virtual ~Environment() = default;

    virtual int observation_size() const = 0;
    virtual int action_count() const = 0;
    virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
    virtual StepResult step(int action) = 0;

    // Mask over actions for the current state; nonzero means allowed.
    virtual std::vector<char> valid_actions() const { return std::vector<char>(action_count(), 1); }

    // Summary statistic of the episode so far (peak-AoI violation rate for the
    // wireless environment).
    virtual double episode_metric() const { return 0.0; }
};

}  // namespace aoi::drl
