#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "aoi/rng.hpp"

namespace aoi::drl {

struct Transition {
    Eigen::VectorXd state;       // stacked observation window
    int action = 0;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool done = false;
    std::vector<char> next_valid;  // empty when every action is valid
    Eigen::VectorXd hidden;        // recurrent state before the window; empty for zeros
    Eigen::VectorXd next_hidden;
    long step = 0;
};

// Fixed-capacity ring buffer; once full, each push overwrites the oldest entry.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    // Index 0 is the oldest stored transition.
    const Transition& at(std::size_t i) const;

    // `count` distinct indices, uniform without replacement (Floyd's method).
    std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // next slot to overwrite once full
    std::vector<Transition> items_;
};

}  // namespace aoi::drl
