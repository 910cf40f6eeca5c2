#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fdrl/divergence.hpp"
#include "fdrl/env.hpp"
#include "fdrl/mlp.hpp"
#include "fdrl/networks.hpp"

namespace fdrl {

enum class Profile { Desk, Paper };
Profile parse_profile(std::string_view text);

// Every training hyperparameter. Keys in the key=value format match the
// member names.
struct TrainConfig {
    DivergenceKind divergence = DivergenceKind::JS;
    EnvKind env = EnvKind::Bimodal1d;
    std::vector<ShapeKind> shapes{kTrainingShapes.begin(), kTrainingShapes.end()};
    std::uint64_t seed = 0;

    int N = 64;   // KDE supports per state
    int M = 128;  // resampled points per state
    int m = 2;    // resampled points per support
    int U = 16;   // uncertainty proposals
    int K = 8;    // actor states per step
    int L = 32;   // critic batch

    // Empty means the environment default.
    std::vector<double> sigma;
    std::vector<double> sigma_prime;  // empty means 3 * sigma

    std::size_t capacity_positive = 20000;
    std::size_t capacity_negative = 20000;
    int interaction_steps = 1;
    int critic_steps = 2;
    int actor_steps = 1;
    std::int64_t total_steps = 20000;
    std::size_t prefill = 4000;
    std::int64_t checkpoint_interval = 0;  // 0: only the final checkpoint

    int latent_dim = 8;
    int hidden_width = 128;
    int hidden_layers = 3;
    Activation activation = Activation::Tanh;

    double lr_actor = 5e-5;
    double lr_critic = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    double eps_p = 1e-12;
    double eps_v = 1e-8;
    double eps_c = 1e-6;
    double eps_r = 1e-6;

    double action_opt_fraction = 0.1;

    GraspSpec grasp;

    // Resolved bandwidths (environment defaults applied).
    Eigen::VectorXd bandwidth() const;
    Eigen::VectorXd proposal_bandwidth() const;

    NetworkShape network_shape() const { return {hidden_width, hidden_layers, activation}; }
    EnvOptions env_options() const { return {grasp, shapes}; }
    Clamps clamps() const { return {eps_p, eps_v}; }

    // Throws ConfigError on violated invariants.
    void validate() const;

    // Canonical key=value text, one key per line in a fixed order.
    std::string to_text() const;
    std::uint64_t hash() const;

    void set(const std::string& key, const std::string& value);
    static TrainConfig for_profile(Profile profile);
    static std::vector<std::string> keys();
};

// Parses key=value lines ('#' starts a comment) onto `base`.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});

Eigen::VectorXd default_bandwidth(EnvKind env);

}  // namespace fdrl
