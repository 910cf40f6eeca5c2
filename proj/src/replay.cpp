#include "fdrl/replay.hpp"

#include "fdrl/errors.hpp"

namespace fdrl {

ExperienceRing::ExperienceRing(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ContractError("replay capacity must be >= 1");
    items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ExperienceRing::push(Experience e) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(e));
        return;
    }
    items_[head_] = std::move(e);
    head_ = (head_ + 1) % capacity_;
}

const Experience& ExperienceRing::at(std::size_t i) const {
    if (i >= items_.size()) throw ContractError("replay index out of range");
    return items_[(head_ + i) % items_.size()];
}

BalancedMemory::BalancedMemory(std::size_t positive_capacity, std::size_t negative_capacity)
    : positive_(positive_capacity), negative_(negative_capacity) {}

void BalancedMemory::push(Experience e) {
    if (e.outcome)
        positive_.push(std::move(e));
    else
        negative_.push(std::move(e));
}

std::vector<Experience> BalancedMemory::sample_balanced(std::size_t count, Rng& rng) const {
    if (!ready()) throw NotReadyError("balanced sampling needs both stores non-empty");
    std::vector<Experience> out;
    out.reserve(count);
    const std::size_t n_pos = (count + 1) / 2;
    for (std::size_t i = 0; i < n_pos; ++i) out.push_back(positive_.at(rng.index(positive_.size())));
    for (std::size_t i = n_pos; i < count; ++i) out.push_back(negative_.at(rng.index(negative_.size())));
    return out;
}

std::vector<StateDescriptor> BalancedMemory::sample_states(std::size_t count, Rng& rng) const {
    const std::size_t total = size();
    if (total == 0) throw NotReadyError("state sampling needs a non-empty memory");
    std::vector<StateDescriptor> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t k = rng.index(total);
        out.push_back(k < positive_.size() ? positive_.at(k).state : negative_.at(k - positive_.size()).state);
    }
    return out;
}

std::vector<Experience> BalancedMemory::sample_positive(std::size_t count, Rng& rng) const {
    if (positive_.empty()) throw NotReadyError("positive store is empty");
    std::vector<Experience> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(positive_.at(rng.index(positive_.size())));
    return out;
}

Experience make_experience(const Environment& env, const StateDescriptor& state,
                           const Eigen::Ref<const Eigen::VectorXd>& raw_action) {
    const CriticInput input = env.critic_input(raw_action);
    return {state, input.features, input.radius, env.evaluate(state, raw_action)};
}

void prefill(BalancedMemory& memory, const Environment& env, std::size_t count, Rng& rng,
             std::size_t attempt_budget) {
    bool has_positive = !memory.positive().empty();
    bool has_negative = !memory.negative().empty();
    for (std::size_t i = 0; i < count; ++i) {
        const StateDescriptor s = env.generate_state(rng);
        Experience e = make_experience(env, s, env.uniform_action(rng));
        (e.outcome ? has_positive : has_negative) = true;
        memory.push(std::move(e));
    }
    for (std::size_t attempt = 0; attempt < attempt_budget && !(has_positive && has_negative); ++attempt) {
        const StateDescriptor s = env.generate_state(rng);
        Experience e = make_experience(env, s, env.uniform_action(rng));
        if (e.outcome ? has_positive : has_negative) continue;
        (e.outcome ? has_positive : has_negative) = true;
        memory.push(std::move(e));
    }
    if (!has_positive) throw EnvironmentTooSparseError("prefill found no feasible action within its attempt budget");
    if (!has_negative) throw EnvironmentTooSparseError("prefill found no infeasible action within its attempt budget");
}

}  // namespace fdrl
