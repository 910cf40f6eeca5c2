#include "fdrl/trainer.hpp"

#include <cmath>
#include <mutex>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "fdrl/errors.hpp"
#include "fdrl/parallel.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace fdrl {

namespace {

constexpr std::size_t kOutcomeWindow = 100;

// Training allocates and frees the same large temporaries every step. With
// glibc's default mmap threshold each of them is a fresh mapping that has to
// be faulted in and zeroed by the kernel, which costs about a third of the
// step time. Keeping them on the heap avoids that.
void tune_allocator() {
#if defined(__GLIBC__)
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 256 << 20);
        mallopt(M_TRIM_THRESHOLD, 512 << 20);
        mallopt(M_TOP_PAD, 64 << 20);
    });
#endif
}

void require_finite(const Eigen::VectorXd& grad, const char* what) {
    if (!grad.allFinite()) throw std::runtime_error(std::string("non-finite gradient in ") + what);
}

}  // namespace

const char* TrainLog::header() {
    return "step,divergence,critic_loss,positive_rate,volume_mean,degenerate,grad_norm";
}

void TrainLog::write_csv(std::ostream& out) const {
    out << header() << '\n';
    out.precision(10);
    for (const auto& r : records) {
        out << r.step << ',' << r.divergence << ',' << r.critic_loss << ',' << r.positive_rate << ','
            << r.volume_mean << ',' << r.degenerate << ',' << r.grad_norm << '\n';
    }
}

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      env_((config_.validate(), make_environment(config_.env, config_.env_options()))),
      rng_(config_.seed),
      actor_(env_->state_dim(), config_.latent_dim, env_->action_lower(), env_->action_upper(),
             config_.network_shape()),
      critic_(env_->state_dim(), env_->feature_dim(), config_.eps_c, config_.network_shape()),
      memory_(config_.capacity_positive, config_.capacity_negative) {
    tune_allocator();
    actor_.initialize(rng_);
    critic_.initialize(rng_);
    actor_adam_ = AdamState(actor_.params().size());
    critic_adam_ = AdamState(critic_.params().size());
}

void Trainer::prefill() { fdrl::prefill(memory_, *env_, config_.prefill, rng_); }

Eigen::MatrixXd Trainer::features_of(const Eigen::MatrixXd& raw_actions) const {
    Eigen::MatrixXd f(env_->feature_dim(), raw_actions.cols());
    for (Eigen::Index j = 0; j < raw_actions.cols(); ++j) f.col(j) = env_->critic_input(raw_actions.col(j)).features;
    return f;
}

int Trainer::most_uncertain(const Eigen::VectorXd& xi) {
    if (xi.size() == 0) throw ContractError("no proposals to choose from");
    int best = 0;
    double best_gap = std::abs(0.5 - xi[0]);
    for (Eigen::Index i = 1; i < xi.size(); ++i) {
        const double gap = std::abs(0.5 - xi[i]);
        if (gap < best_gap) {
            best_gap = gap;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Experience Trainer::collect_step() {
    const StateDescriptor state = env_->generate_state(rng_);
    const Eigen::VectorXd s = state.features();
    const Eigen::MatrixXd latents = actor_.sample_latents(config_.U, rng_);
    const Eigen::MatrixXd actions = actor_.forward(s, latents);
    const Eigen::VectorXd xi = critic_.forward(Critic::stack(s, features_of(actions))).xi;
    const int j = most_uncertain(xi);
    Experience e = make_experience(*env_, state, actions.col(j));
    memory_.push(e);
    ++interactions_;
    if (recent_outcomes_.size() < kOutcomeWindow)
        recent_outcomes_.push_back(e.outcome);
    else
        recent_outcomes_[recent_next_] = e.outcome;
    recent_next_ = (recent_next_ + 1) % kOutcomeWindow;
    return e;
}

double Trainer::critic_step() {
    const auto batch = memory_.sample_balanced(static_cast<std::size_t>(config_.L), rng_);
    Eigen::MatrixXd inputs(env_->state_dim() + env_->feature_dim(), static_cast<Eigen::Index>(batch.size()));
    Eigen::VectorXd targets(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto col = static_cast<Eigen::Index>(b);
        inputs.col(col) << batch[b].state.features(), batch[b].action;
        targets[col] = batch[b].outcome ? 1.0 : 0.0;
    }
    Eigen::VectorXd grad;
    const double loss = critic_.bce_loss_and_grad(inputs, targets, &grad);
    require_finite(grad, "critic step");
    adam_step(critic_.params(), grad, critic_adam_,
              {config_.lr_critic, config_.adam_beta1, config_.adam_beta2, config_.adam_eps});
    ++critic_updates_;
    return loss;
}

double Trainer::discriminator_step() {
    // Real: positive experiences. Fake: actor proposals for the states of
    // another positive draw.
    const std::size_t n_real = (static_cast<std::size_t>(config_.L) + 1) / 2;
    const std::size_t n_fake = static_cast<std::size_t>(config_.L) - n_real;
    const auto real = memory_.sample_positive(n_real, rng_);
    const auto fake_states = memory_.sample_positive(n_fake, rng_);
    const int rows = env_->state_dim() + env_->feature_dim();
    Eigen::MatrixXd inputs(rows, config_.L);
    Eigen::VectorXd targets(config_.L);
    for (std::size_t b = 0; b < n_real; ++b) {
        inputs.col(static_cast<Eigen::Index>(b)) << real[b].state.features(), real[b].action;
        targets[static_cast<Eigen::Index>(b)] = 1.0;
    }
    for (std::size_t b = 0; b < n_fake; ++b) {
        const Eigen::VectorXd s = fake_states[b].state.features();
        const Eigen::MatrixXd a = actor_.forward(s, actor_.sample_latents(1, rng_));
        const auto col = static_cast<Eigen::Index>(n_real + b);
        inputs.col(col) << s, env_->critic_input(a.col(0)).features;
        targets[col] = 0.0;
    }
    Eigen::VectorXd grad;
    const double loss = critic_.bce_loss_and_grad(inputs, targets, &grad);
    require_finite(grad, "discriminator step");
    adam_step(critic_.params(), grad, critic_adam_,
              {config_.lr_critic, config_.adam_beta1, config_.adam_beta2, config_.adam_eps});
    ++critic_updates_;
    return loss;
}

std::vector<StateGradient> Trainer::fdiv_gradients(const std::vector<StateDescriptor>& states,
                                                   std::vector<Rng>& streams, Eigen::VectorXd* param_grad) const {
    const int count = static_cast<int>(states.size());
    const int n = config_.N;
    const int sd = env_->state_dim();
    const int fd = env_->feature_dim();

    Eigen::MatrixXd state_cols(sd, static_cast<Eigen::Index>(count) * n);
    Eigen::MatrixXd latents(config_.latent_dim, state_cols.cols());
    for (int k = 0; k < count; ++k) {
        state_cols.middleCols(k * n, n) = states[k].features().replicate(1, n);
        latents.middleCols(k * n, n) = actor_.sample_latents(n, streams[k]);
    }
    Actor::Cache cache;
    const Eigen::MatrixXd supports = actor_.forward_batch(state_cols, latents, cache);

    std::vector<StateGradient> out(states.size());
    std::vector<std::optional<KdeModel>> kdes(states.size());
    parallel_for(count, threads_, [&](int k) {
        kdes[k].emplace(supports.middleCols(k * n, n), config_.bandwidth());
        const KdeModel proposal = kdes[k]->with_bandwidth(config_.proposal_bandwidth());
        SampleBatch& batch = out[k].batch;
        batch.resampled_points = proposal.sample(config_.m, streams[k]);
        // The kernels have full support; the floor only guards against
        // underflow far from every support.
        batch.q_hat = kdes[k]->eval_batch(batch.resampled_points).cwiseMax(std::numeric_limits<double>::min());
        batch.q_prop = proposal.eval_batch(batch.resampled_points).cwiseMax(std::numeric_limits<double>::min());
    });

    // Critic scores for every resampled point in one pass.
    const Eigen::Index per_state = out.empty() ? 0 : out.front().batch.resampled_points.cols();
    Eigen::MatrixXd inputs(sd + fd, per_state * count);
    Eigen::VectorXd weights(inputs.cols());
    for (int k = 0; k < count; ++k) {
        const Eigen::VectorXd s = states[k].features();
        const Eigen::MatrixXd& points = out[k].batch.resampled_points;
        for (Eigen::Index j = 0; j < per_state; ++j) {
            const Eigen::Index col = k * per_state + j;
            const CriticInput in = env_->critic_input(points.col(j));
            inputs.col(col).head(sd) = s;
            inputs.col(col).tail(fd) = in.features;
            weights[col] = in.valid ? in.weight : 0.0;
        }
    }
    const Eigen::VectorXd scores = critic_.forward(inputs).xi.cwiseProduct(weights);

    Eigen::MatrixXd grad_actions = Eigen::MatrixXd::Zero(supports.rows(), supports.cols());
    parallel_for(count, threads_, [&](int k) {
        SampleBatch& batch = out[k].batch;
        batch.score = scores.segment(k * per_state, per_state);
        normalize_target(batch, config_.clamps());
        if (batch.volume.degenerate) {
            out[k].degenerate = true;
            return;
        }
        const Eigen::VectorXd w = grad_weights(config_.divergence, batch);
        out[k].divergence = estimate_divergence(config_.divergence, batch).value;
        grad_actions.middleCols(k * n, n) =
            kdes[k]->weighted_grad_supports(batch.resampled_points, w) / static_cast<double>(per_state);
    });
    if (param_grad) actor_.backward(cache, grad_actions, param_grad);
    return out;
}

StateGradient Trainer::fdiv_state_gradient(const StateDescriptor& state, Rng& rng) const {
    std::vector<Rng> streams{rng};
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(actor_.params().size());
    auto parts = fdiv_gradients({state}, streams, &grad);
    rng = streams.front();
    StateGradient result = std::move(parts.front());
    result.param_grad = std::move(grad);
    return result;
}

void Trainer::apply_actor_gradient(const Eigen::VectorXd& grad) {
    require_finite(grad, "actor step");
    adam_step(actor_.params(), grad, actor_adam_,
              {config_.lr_actor, config_.adam_beta1, config_.adam_beta2, config_.adam_eps});
    ++actor_updates_;
}

ActorStepResult Trainer::actor_step_fdiv() {
    const auto states = memory_.sample_states(static_cast<std::size_t>(config_.K), rng_);
    std::vector<Rng> streams;
    streams.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) streams.push_back(rng_.split());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(actor_.params().size());
    const auto parts = fdiv_gradients(states, streams, &grad);

    ActorStepResult result;
    for (const auto& part : parts) {
        result.critic_calls += part.batch.score.size();
        if (part.degenerate) {
            ++result.degenerate;
            continue;
        }
        ++result.evaluated;
        result.objective += part.divergence;
        result.volume_mean += part.batch.volume.value;
    }
    if (result.evaluated == 0) return result;
    grad /= static_cast<double>(states.size());
    result.objective /= result.evaluated;
    result.volume_mean /= result.evaluated;
    result.grad_norm = grad.norm();
    apply_actor_gradient(grad);
    return result;
}

ActorStepResult Trainer::actor_step_me() {
    const auto states = memory_.sample_states(static_cast<std::size_t>(config_.K), rng_);
    std::vector<Rng> streams;
    for (std::size_t k = 0; k < states.size(); ++k) streams.push_back(rng_.split());
    std::vector<Eigen::VectorXd> grads(states.size());
    std::vector<double> objectives(states.size());
    const double n = static_cast<double>(config_.N);
    parallel_for(static_cast<int>(states.size()), threads_, [&](int k) {
        const Eigen::VectorXd s = states[k].features();
        const Eigen::MatrixXd latents = actor_.sample_latents(config_.N, streams[k]);
        Actor::Cache cache;
        const Eigen::MatrixXd actions = actor_.forward(s, latents, cache);
        const KdeModel kde(actions, config_.bandwidth());
        // Entropy term: d/dtheta (1/N) sum_i log q(a_i), through queries and supports.
        Eigen::MatrixXd grad_actions = kde.weighted_grad_self(Eigen::VectorXd::Ones(config_.N)) / n;
        // Critic term: -(1/N) sum_i d/da log(xi * weight).
        const Eigen::MatrixXd features = features_of(actions);
        const Eigen::MatrixXd inputs = Critic::stack(s, features);
        const Eigen::MatrixXd dfeat = critic_.feature_grad(inputs, Eigen::VectorXd::Ones(config_.N), {});
        double objective = kde.log_eval_batch(actions).mean();
        const Eigen::VectorXd xi = critic_.forward(inputs).xi;
        for (int i = 0; i < config_.N; ++i) {
            const Eigen::VectorXd da = env_->critic_input_jacobian(actions.col(i)).transpose() * dfeat.col(i) +
                                       env_->log_weight_gradient(actions.col(i));
            grad_actions.col(i) -= da / n;
            objective -= (std::log(xi[i]) + std::log(std::max(env_->critic_input(actions.col(i)).weight,
                                                              config_.eps_p))) /
                         n;
        }
        grads[k] = Eigen::VectorXd::Zero(actor_.params().size());
        actor_.backward(cache, grad_actions, &grads[k]);
        objectives[k] = objective;
    });
    ActorStepResult result;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(actor_.params().size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        grad += grads[k];
        result.objective += objectives[k];
    }
    grad /= static_cast<double>(states.size());
    result.objective /= static_cast<double>(states.size());
    result.evaluated = static_cast<int>(states.size());
    result.critic_calls = static_cast<std::int64_t>(states.size()) * config_.N;
    result.grad_norm = grad.norm();
    apply_actor_gradient(grad);
    return result;
}

ActorStepResult Trainer::actor_step_gan() {
    const auto positives = memory_.sample_positive(static_cast<std::size_t>(config_.K), rng_);
    std::vector<Rng> streams;
    for (std::size_t k = 0; k < positives.size(); ++k) streams.push_back(rng_.split());
    std::vector<Eigen::VectorXd> grads(positives.size());
    std::vector<double> objectives(positives.size());
    const double n = static_cast<double>(config_.N);
    parallel_for(static_cast<int>(positives.size()), threads_, [&](int k) {
        const Eigen::VectorXd s = positives[k].state.features();
        const Eigen::MatrixXd latents = actor_.sample_latents(config_.N, streams[k]);
        Actor::Cache cache;
        const Eigen::MatrixXd actions = actor_.forward(s, latents, cache);
        const Eigen::MatrixXd inputs = Critic::stack(s, features_of(actions));
        // Descent on (1/N) sum_i log(1 - xi(s, a_i)).
        const Eigen::MatrixXd dfeat = critic_.feature_grad(inputs, {}, Eigen::VectorXd::Ones(config_.N));
        Eigen::MatrixXd grad_actions(actions.rows(), actions.cols());
        for (int i = 0; i < config_.N; ++i)
            grad_actions.col(i) = env_->critic_input_jacobian(actions.col(i)).transpose() * dfeat.col(i) / n;
        grads[k] = Eigen::VectorXd::Zero(actor_.params().size());
        actor_.backward(cache, grad_actions, &grads[k]);
        objectives[k] = (1.0 - critic_.forward(inputs).xi.array()).log().mean();
    });
    ActorStepResult result;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(actor_.params().size());
    for (std::size_t k = 0; k < positives.size(); ++k) {
        grad += grads[k];
        result.objective += objectives[k];
    }
    grad /= static_cast<double>(positives.size());
    result.objective /= static_cast<double>(positives.size());
    result.evaluated = static_cast<int>(positives.size());
    result.critic_calls = static_cast<std::int64_t>(positives.size()) * config_.N;
    result.grad_norm = grad.norm();
    apply_actor_gradient(grad);
    return result;
}

ActorStepResult Trainer::actor_step() {
    switch (config_.divergence) {
        case DivergenceKind::ME: return actor_step_me();
        case DivergenceKind::GAN: return actor_step_gan();
        default: return actor_step_fdiv();
    }
}

StepRecord Trainer::train_step() {
    StepRecord record;
    record.step = ++step_;
    for (int i = 0; i < config_.interaction_steps; ++i) collect_step();
    for (int i = 0; i < config_.critic_steps; ++i)
        record.critic_loss +=
            config_.divergence == DivergenceKind::GAN ? discriminator_step() : critic_step();
    record.critic_loss /= config_.critic_steps;
    double objective = 0.0;
    double volume = 0.0;
    int contributing = 0;
    for (int i = 0; i < config_.actor_steps; ++i) {
        const ActorStepResult r = actor_step();
        record.degenerate += r.degenerate;
        record.grad_norm = r.grad_norm;
        if (r.evaluated > 0) {
            objective += r.objective;
            volume += r.volume_mean;
            ++contributing;
        }
    }
    if (contributing > 0) {
        record.divergence = objective / contributing;
        record.volume_mean = volume / contributing;
    }
    std::size_t positives = 0;
    for (auto o : recent_outcomes_) positives += o;
    record.positive_rate =
        recent_outcomes_.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(recent_outcomes_.size());
    return record;
}

TrainLog Trainer::train(const CheckpointCallback& on_checkpoint) {
    prefill();
    TrainLog log;
    log.records.reserve(static_cast<std::size_t>(config_.total_steps));
    for (std::int64_t i = 0; i < config_.total_steps; ++i) {
        log.records.push_back(train_step());
        if (on_checkpoint && config_.checkpoint_interval > 0 && step_ % config_.checkpoint_interval == 0 &&
            step_ != config_.total_steps)
            on_checkpoint(checkpoint());
    }
    if (on_checkpoint) on_checkpoint(checkpoint());
    return log;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint c;
    c.config_hash = config_.hash();
    c.step = step_;
    c.config_text = config_.to_text();
    c.actor = {actor_.architecture_hash(), actor_.params(), actor_adam_};
    c.critic = {critic_.architecture_hash(), critic_.params(), critic_adam_};
    c.rng_state = rng_.serialize();
    return c;
}

void Trainer::restore(const Checkpoint& ckpt) {
    if (ckpt.actor.architecture != actor_.architecture_hash() ||
        ckpt.critic.architecture != critic_.architecture_hash() ||
        ckpt.actor.params.size() != actor_.params().size() || ckpt.critic.params.size() != critic_.params().size())
        throw FormatError("checkpoint architecture does not match the configured networks");
    actor_.params() = ckpt.actor.params;
    actor_adam_ = ckpt.actor.adam;
    critic_.params() = ckpt.critic.params;
    critic_adam_ = ckpt.critic.adam;
    rng_.deserialize(ckpt.rng_state);
    step_ = ckpt.step;
}

LoadedModel load_model(const Checkpoint& ckpt) {
    std::istringstream text(ckpt.config_text);
    TrainConfig config = parse_config(text);
    if (config.hash() != ckpt.config_hash) throw FormatError("checkpoint config hash mismatch");
    config.validate();
    LoadedModel model;
    model.env = make_environment(config.env, config.env_options());
    model.actor = Actor(model.env->state_dim(), config.latent_dim, model.env->action_lower(),
                        model.env->action_upper(), config.network_shape());
    model.critic = Critic(model.env->state_dim(), model.env->feature_dim(), config.eps_c, config.network_shape());
    if (ckpt.actor.architecture != model.actor.architecture_hash() ||
        ckpt.critic.architecture != model.critic.architecture_hash() ||
        ckpt.actor.params.size() != model.actor.params().size() ||
        ckpt.critic.params.size() != model.critic.params().size())
        throw FormatError("checkpoint architecture does not match its config");
    model.actor.params() = ckpt.actor.params;
    model.critic.params() = ckpt.critic.params;
    model.config = std::move(config);
    return model;
}

}  // namespace fdrl
