#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "fdrl/kde.hpp"
#include "fdrl/mlp.hpp"
#include "fdrl/rng.hpp"

namespace fdrl {

struct NetworkShape {
    int hidden_width = 128;
    int hidden_layers = 3;
    Activation activation = Activation::Tanh;
};

// Generator pi(s, z): [state; latent] -> bounded raw action. Each output
// component is squashed into [lower, upper] by lower + (upper-lower)(tanh+1)/2.
class Actor {
public:
    struct Cache {
        Mlp::Cache net;
        Eigen::MatrixXd pre;  // pre-squash outputs
    };

    Actor() = default;
    Actor(int state_dim, int latent_dim, Eigen::VectorXd lower, Eigen::VectorXd upper, NetworkShape shape = {});

    void initialize(Rng& rng) { net_.initialize(rng); }

    int state_dim() const { return state_dim_; }
    int latent_dim() const { return latent_dim_; }
    int action_dim() const { return static_cast<int>(lower_.size()); }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    Eigen::VectorXd& params() { return net_.params(); }
    const Eigen::VectorXd& params() const { return net_.params(); }

    // Uniform latents in [0,1]^d, one column per draw.
    Eigen::MatrixXd sample_latents(int count, Rng& rng) const;

    // One action per latent column, all for the same state.
    Eigen::MatrixXd forward(const Eigen::VectorXd& state, const Eigen::MatrixXd& latents) const;
    Eigen::MatrixXd forward(const Eigen::VectorXd& state, const Eigen::MatrixXd& latents, Cache& cache) const;

    // One action per column with its own state column (state_dim x B).
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& latents, Cache& cache) const;

    // Accumulates sum_i (d a_i / d theta)^T grad_actions.col(i) into
    // *param_grad and returns d/d latents.
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_actions,
                             Eigen::VectorXd* param_grad) const;

    std::uint64_t architecture_hash() const;

private:
    Eigen::MatrixXd squash(Cache& cache, Eigen::MatrixXd input) const;

    int state_dim_ = 0;
    int latent_dim_ = 0;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    Mlp net_;
};

struct CriticOutput {
    Eigen::VectorXd logit;
    Eigen::VectorXd xi;  // sigmoid(logit) clamped to [eps_c, 1 - eps_c]
};

// Feasibility critic xi(s, a) on [state; action features].
class Critic {
public:
    Critic() = default;
    Critic(int state_dim, int feature_dim, double eps_c = 1e-6, NetworkShape shape = {});

    void initialize(Rng& rng) { net_.initialize(rng); }

    int state_dim() const { return state_dim_; }
    int feature_dim() const { return feature_dim_; }
    double eps_c() const { return eps_c_; }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    Eigen::VectorXd& params() { return net_.params(); }
    const Eigen::VectorXd& params() const { return net_.params(); }

    // inputs are (state_dim + feature_dim) x B.
    CriticOutput forward(const Eigen::MatrixXd& inputs) const;
    double forward(const Eigen::VectorXd& state, const Eigen::VectorXd& features) const;

    static Eigen::MatrixXd stack(const Eigen::VectorXd& state, const Eigen::MatrixXd& features);

    // Mean binary cross-entropy against soft targets in [0,1] and its
    // parameter gradient (written to *grad, resized as needed).
    double bce_loss_and_grad(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                             Eigen::VectorXd* grad) const;

    // Gradient of sum_b coeff_log_xi[b] log xi_b + coeff_log_one_minus[b] log(1 - xi_b)
    // with respect to the action features (rows [state_dim, end) of the
    // input). Either coefficient vector may be empty.
    Eigen::MatrixXd feature_grad(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& coeff_log_xi,
                                 const Eigen::VectorXd& coeff_log_one_minus) const;

    std::uint64_t architecture_hash() const { return net_.architecture_hash(); }

private:
    int state_dim_ = 0;
    int feature_dim_ = 0;
    double eps_c_ = 1e-6;
    Mlp net_;
};

// Parameter gradient of (1/M) sum_j w_j log q_hat(a*_j) for one state,
// where q_hat is the sigma-KDE over the actor outputs for `latents` and the
// resampled points are constants. Added into *param_grad, scaled by `scale`.
void actor_param_grad_through_kde(const Actor& actor, const Eigen::VectorXd& state,
                                  const Eigen::MatrixXd& latents, const Eigen::VectorXd& weights,
                                  const KdeModel& kde, const Eigen::MatrixXd& resampled, double scale,
                                  Eigen::VectorXd* param_grad);

}  // namespace fdrl
