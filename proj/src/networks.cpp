#include "fdrl/networks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fdrl/errors.hpp"

namespace fdrl {

namespace {

std::vector<int> layer_sizes(int in, int out, const NetworkShape& shape) {
    std::vector<int> sizes{in};
    for (int i = 0; i < shape.hidden_layers; ++i) sizes.push_back(shape.hidden_width);
    sizes.push_back(out);
    return sizes;
}

// log sigmoid(z) = -softplus(-z)
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Actor::Actor(int state_dim, int latent_dim, Eigen::VectorXd lower, Eigen::VectorXd upper, NetworkShape shape)
    : state_dim_(state_dim),
      latent_dim_(latent_dim),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      net_(layer_sizes(state_dim + latent_dim, static_cast<int>(lower_.size()), shape), shape.activation) {
    if (lower_.size() != upper_.size() || (upper_.array() <= lower_.array()).any())
        throw ContractError("actor bounds must satisfy lower < upper");
    if (latent_dim_ < 1) throw ContractError("actor latent dimension must be >= 1");
}

Eigen::MatrixXd Actor::sample_latents(int count, Rng& rng) const {
    Eigen::MatrixXd z(latent_dim_, count);
    for (int c = 0; c < count; ++c)
        for (int d = 0; d < latent_dim_; ++d) z(d, c) = rng.uniform();
    return z;
}

Eigen::MatrixXd Actor::forward(const Eigen::VectorXd& state, const Eigen::MatrixXd& latents) const {
    Cache cache;
    return forward(state, latents, cache);
}

Eigen::MatrixXd Actor::forward(const Eigen::VectorXd& state, const Eigen::MatrixXd& latents, Cache& cache) const {
    if (state.size() != state_dim_ || latents.rows() != latent_dim_)
        throw ContractError("actor input dimension mismatch");
    Eigen::MatrixXd x(state_dim_ + latent_dim_, latents.cols());
    x.topRows(state_dim_) = state.replicate(1, latents.cols());
    x.bottomRows(latent_dim_) = latents;
    return squash(cache, std::move(x));
}

Eigen::MatrixXd Actor::forward_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& latents,
                                     Cache& cache) const {
    if (states.rows() != state_dim_ || latents.rows() != latent_dim_ || states.cols() != latents.cols())
        throw ContractError("actor input dimension mismatch");
    Eigen::MatrixXd x(state_dim_ + latent_dim_, latents.cols());
    x.topRows(state_dim_) = states;
    x.bottomRows(latent_dim_) = latents;
    return squash(cache, std::move(x));
}

Eigen::MatrixXd Actor::squash(Cache& cache, Eigen::MatrixXd input) const {
    cache.pre = net_.forward(input, cache.net);
    const Eigen::VectorXd half_range = 0.5 * (upper_ - lower_);
    Eigen::MatrixXd out = cache.pre.array().tanh() + 1.0;
    out = (half_range.asDiagonal() * out).colwise() + lower_;
    return out;
}

Eigen::MatrixXd Actor::backward(const Cache& cache, const Eigen::MatrixXd& grad_actions,
                                Eigen::VectorXd* param_grad) const {
    const Eigen::VectorXd half_range = 0.5 * (upper_ - lower_);
    Eigen::MatrixXd grad_pre = grad_actions.array() * (1.0 - cache.pre.array().tanh().square());
    grad_pre = half_range.asDiagonal() * grad_pre;
    const Eigen::MatrixXd grad_in = net_.backward(cache.net, grad_pre, param_grad);
    return grad_in.bottomRows(latent_dim_);
}

std::uint64_t Actor::architecture_hash() const {
    std::uint64_t h = net_.architecture_hash();
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        h ^= std::bit_cast<std::uint64_t>(lower_[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::bit_cast<std::uint64_t>(upper_[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

Critic::Critic(int state_dim, int feature_dim, double eps_c, NetworkShape shape)
    : state_dim_(state_dim),
      feature_dim_(feature_dim),
      eps_c_(eps_c),
      net_(layer_sizes(state_dim + feature_dim, 1, shape), shape.activation) {}

Eigen::MatrixXd Critic::stack(const Eigen::VectorXd& state, const Eigen::MatrixXd& features) {
    Eigen::MatrixXd x(state.size() + features.rows(), features.cols());
    x.topRows(state.size()) = state.replicate(1, features.cols());
    x.bottomRows(features.rows()) = features;
    return x;
}

CriticOutput Critic::forward(const Eigen::MatrixXd& inputs) const {
    CriticOutput out;
    out.logit = net_.forward(inputs).row(0).transpose();
    out.xi.resize(out.logit.size());
    for (Eigen::Index b = 0; b < out.logit.size(); ++b)
        out.xi[b] = std::clamp(sigmoid(out.logit[b]), eps_c_, 1.0 - eps_c_);
    return out;
}

double Critic::forward(const Eigen::VectorXd& state, const Eigen::VectorXd& features) const {
    return forward(stack(state, features)).xi[0];
}

double Critic::bce_loss_and_grad(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                 Eigen::VectorXd* grad) const {
    if (inputs.cols() != targets.size() || targets.size() == 0)
        throw ContractError("critic batch and target sizes differ");
    Mlp::Cache cache;
    const Eigen::RowVectorXd logit = net_.forward(inputs, cache).row(0);
    const double batch = static_cast<double>(targets.size());
    double loss = 0.0;
    Eigen::MatrixXd grad_out(1, targets.size());
    for (Eigen::Index b = 0; b < targets.size(); ++b) {
        const double z = logit[b];
        const double t = targets[b];
        // -[t log s(z) + (1-t) log(1 - s(z))], with log(1 - s(z)) = log s(-z)
        loss -= t * log_sigmoid(z) + (1.0 - t) * log_sigmoid(-z);
        grad_out(0, b) = (sigmoid(z) - t) / batch;
    }
    if (grad) {
        grad->setZero(net_.parameter_count());
        net_.backward(cache, grad_out, grad);
    }
    return loss / batch;
}

Eigen::MatrixXd Critic::feature_grad(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& coeff_log_xi,
                                     const Eigen::VectorXd& coeff_log_one_minus) const {
    Mlp::Cache cache;
    const Eigen::RowVectorXd logit = net_.forward(inputs, cache).row(0);
    Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(1, inputs.cols());
    for (Eigen::Index b = 0; b < inputs.cols(); ++b) {
        const double s = sigmoid(logit[b]);
        // d log s / dz = 1 - s; d log(1 - s) / dz = -s
        if (coeff_log_xi.size() > 0) grad_out(0, b) += coeff_log_xi[b] * (1.0 - s);
        if (coeff_log_one_minus.size() > 0) grad_out(0, b) -= coeff_log_one_minus[b] * s;
    }
    const Eigen::MatrixXd grad_in = net_.backward(cache, grad_out, nullptr);
    return grad_in.bottomRows(feature_dim_);
}

void actor_param_grad_through_kde(const Actor& actor, const Eigen::VectorXd& state,
                                  const Eigen::MatrixXd& latents, const Eigen::VectorXd& weights,
                                  const KdeModel& kde, const Eigen::MatrixXd& resampled, double scale,
                                  Eigen::VectorXd* param_grad) {
    if (resampled.cols() != weights.size()) throw ContractError("weights and resampled points differ in count");
    if (kde.size() != latents.cols()) throw ContractError("kde supports must correspond to latents");
    Actor::Cache cache;
    actor.forward(state, latents, cache);
    const double m = static_cast<double>(resampled.cols());
    const Eigen::MatrixXd grad_supports = kde.weighted_grad_supports(resampled, weights) * (scale / m);
    actor.backward(cache, grad_supports, param_grad);
}

}  // namespace fdrl
