#include "aoi/drl/replay_buffer.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace aoi::drl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be >= 1");
    items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("replay index out of range");
    return items_.size() < capacity_ ? items_[i] : items_[(head_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
    const std::size_t n = items_.size();
    if (count > n) throw std::invalid_argument("minibatch larger than the replay buffer");
    std::vector<std::size_t> out;
    out.reserve(count);
    std::unordered_set<std::size_t> chosen;
    for (std::size_t j = n - count; j < n; ++j) {
        const auto t = std::min(static_cast<std::size_t>(uniform01(rng) * (j + 1)), j);
        const std::size_t pick = chosen.count(t) ? j : t;
        chosen.insert(pick);
        out.push_back(pick);
    }
    return out;
}

}  // namespace aoi::drl
