#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "fdrl/checkpoint.hpp"
#include "fdrl/config.hpp"
#include "fdrl/divergence.hpp"
#include "fdrl/env.hpp"
#include "fdrl/networks.hpp"
#include "fdrl/replay.hpp"
#include "fdrl/rng.hpp"

namespace fdrl {

struct StepRecord {
    std::int64_t step = 0;
    double divergence = 0.0;     // mean estimate over non-degenerate states (f-div), objective otherwise
    double critic_loss = 0.0;    // mean over critic steps of this outer step
    double positive_rate = 0.0;  // fraction of positives among the last 100 collected experiences
    double volume_mean = 0.0;    // mean V over non-degenerate states
    int degenerate = 0;          // skipped states in this step's actor updates
    double grad_norm = 0.0;      // actor gradient norm of the last actor step
};

// Append-only training log. CSV columns, in order:
//   step,divergence,critic_loss,positive_rate,volume_mean,degenerate,grad_norm
struct TrainLog {
    std::vector<StepRecord> records;
    void write_csv(std::ostream& out) const;
    static const char* header();
};

struct ActorStepResult {
    double grad_norm = 0.0;
    double objective = 0.0;  // divergence estimate or surrogate objective
    double volume_mean = 0.0;
    int degenerate = 0;
    int evaluated = 0;    // states that contributed
    std::int64_t critic_calls = 0;
};

// Per-state f-divergence quantities, exposed for tests.
struct StateGradient {
    Eigen::VectorXd param_grad;  // gradient of (1/M) sum_j w_j log q(a*_j)
    SampleBatch batch;
    double divergence = 0.0;
    bool degenerate = false;
};

class Trainer {
public:
    explicit Trainer(TrainConfig config);

    const TrainConfig& config() const { return config_; }
    const Environment& env() const { return *env_; }
    Actor& actor() { return actor_; }
    const Actor& actor() const { return actor_; }
    Critic& critic() { return critic_; }
    const Critic& critic() const { return critic_; }
    BalancedMemory& memory() { return memory_; }
    const BalancedMemory& memory() const { return memory_; }
    Rng& rng() { return rng_; }

    // Worker threads for the per-state actor computations. Results do not
    // depend on the thread count.
    void set_threads(int threads) { threads_ = std::max(1, threads); }

    void prefill();

    // Maximum-uncertainty interaction.
    Experience collect_step();
    // Index of the proposal whose critic value is nearest 0.5; ties go to
    // the lowest index.
    static int most_uncertain(const Eigen::VectorXd& xi);

    double critic_step();
    double discriminator_step();

    ActorStepResult actor_step();
    ActorStepResult actor_step_fdiv();
    ActorStepResult actor_step_me();
    ActorStepResult actor_step_gan();

    StateGradient fdiv_state_gradient(const StateDescriptor& state, Rng& rng) const;

    // One outer step: interaction, critic and actor phases.
    StepRecord train_step();

    using CheckpointCallback = std::function<void(const Checkpoint&)>;
    // Prefill followed by total_steps outer steps.
    TrainLog train(const CheckpointCallback& on_checkpoint = {});

    Checkpoint checkpoint() const;
    void restore(const Checkpoint& ckpt);

    std::int64_t step() const { return step_; }
    std::int64_t critic_step_count() const { return critic_updates_; }
    std::int64_t actor_step_count() const { return actor_updates_; }
    std::int64_t interaction_count() const { return interactions_; }

private:
    // f-divergence quantities for several states with all network passes
    // batched. Adds the sum of the per-state parameter gradients into
    // *param_grad; StateGradient::param_grad stays empty.
    std::vector<StateGradient> fdiv_gradients(const std::vector<StateDescriptor>& states, std::vector<Rng>& streams,
                                              Eigen::VectorXd* param_grad) const;
    Eigen::MatrixXd features_of(const Eigen::MatrixXd& raw_actions) const;
    void apply_actor_gradient(const Eigen::VectorXd& grad);

    TrainConfig config_;
    std::unique_ptr<Environment> env_;
    Rng rng_;
    Actor actor_;
    Critic critic_;
    AdamState actor_adam_;
    AdamState critic_adam_;
    BalancedMemory memory_;
    int threads_ = 1;

    std::int64_t step_ = 0;
    std::int64_t critic_updates_ = 0;
    std::int64_t actor_updates_ = 0;
    std::int64_t interactions_ = 0;
    std::vector<std::uint8_t> recent_outcomes_;
    std::size_t recent_next_ = 0;
};

// Rebuilds the actor/critic pair of a checkpoint (used by eval tools).
struct LoadedModel {
    TrainConfig config;
    std::unique_ptr<Environment> env;
    Actor actor;
    Critic critic;
};
LoadedModel load_model(const Checkpoint& ckpt);

}  // namespace fdrl
