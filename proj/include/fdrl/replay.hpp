#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "fdrl/env.hpp"
#include "fdrl/rng.hpp"

namespace fdrl {

struct Experience {
    StateDescriptor state;
    Eigen::VectorXd action;  // critic features (normalized action)
    double radius = 0.0;     // raw radius; 0 for tasks without one
    bool outcome = false;
};

// Fixed-capacity FIFO ring.
class ExperienceRing {
public:
    explicit ExperienceRing(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    // 0 is the oldest stored item.
    const Experience& at(std::size_t i) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // index of the oldest item once full
    std::vector<Experience> items_;
};

// Two label-segregated stores sampled half and half.
class BalancedMemory {
public:
    BalancedMemory(std::size_t positive_capacity, std::size_t negative_capacity);

    void push(Experience e);

    // ceil(L/2) positives followed by floor(L/2) negatives, uniformly with
    // replacement within each store. Throws NotReadyError if a store is empty.
    std::vector<Experience> sample_balanced(std::size_t count, Rng& rng) const;

    // Uniform over the union of both stores.
    std::vector<StateDescriptor> sample_states(std::size_t count, Rng& rng) const;

    // Uniform positives (with replacement).
    std::vector<Experience> sample_positive(std::size_t count, Rng& rng) const;

    const ExperienceRing& positive() const { return positive_; }
    const ExperienceRing& negative() const { return negative_; }
    std::size_t size() const { return positive_.size() + negative_.size(); }
    bool ready() const { return !positive_.empty() && !negative_.empty(); }

private:
    ExperienceRing positive_;
    ExperienceRing negative_;
};

// Pushes `count` experiences of random states and uniformly random actions
// labelled by the environment. If no positive (or negative) shows up within
// `count` draws, keeps drawing up to `attempt_budget` extra attempts, pushing
// only the missing label. Throws EnvironmentTooSparseError when exhausted.
void prefill(BalancedMemory& memory, const Environment& env, std::size_t count, Rng& rng,
             std::size_t attempt_budget = 1'000'000);

Experience make_experience(const Environment& env, const StateDescriptor& state,
                           const Eigen::Ref<const Eigen::VectorXd>& raw_action);

}  // namespace fdrl
