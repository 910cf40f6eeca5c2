#include "fdrl/mlp.hpp"

#include <cmath>

#include "fdrl/errors.hpp"

namespace fdrl {

Mlp::Mlp(std::vector<int> sizes, Activation hidden) : sizes_(std::move(sizes)), activation_(hidden) {
    if (sizes_.size() < 2) throw ContractError("mlp needs at least input and output sizes");
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
        if (sizes_[i] < 1 || sizes_[i + 1] < 1) throw ContractError("mlp layer sizes must be positive");
        LayerView view{offset, offset + static_cast<Eigen::Index>(sizes_[i + 1]) * sizes_[i],
                       sizes_[i + 1], sizes_[i]};
        offset = view.bias_offset + view.rows;
        layers_.push_back(view);
    }
    params_ = Eigen::VectorXd::Zero(offset);
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t layer) const {
    const auto& v = layers_[layer];
    return {params_.data() + v.weight_offset, v.rows, v.cols};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t layer) const {
    const auto& v = layers_[layer];
    return {params_.data() + v.bias_offset, v.rows};
}

void Mlp::initialize(Rng& rng) {
    params_.setZero();
    for (const auto& v : layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(v.rows + v.cols));
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(v.rows) * v.cols; ++k)
            params_[v.weight_offset + k] = rng.uniform(-limit, limit);
    }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
    Cache unused;
    return forward(input, unused);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache& cache) const {
    if (input.rows() != input_dim()) throw ContractError("mlp input dimension mismatch");
    cache.inputs.clear();
    cache.inputs.reserve(layers_.size());
    Eigen::MatrixXd x = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = weight(l) * x;
        z.colwise() += bias(l);
        cache.inputs.push_back(std::move(x));
        if (l + 1 < layers_.size()) {
            if (activation_ == Activation::Tanh)
                x = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);  // tanh through the vectorized exp
            else
                x = z.array().max(0.0);
        } else {
            x = std::move(z);
        }
    }
    return x;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_output,
                              Eigen::VectorXd* param_grad) const {
    if (cache.inputs.size() != layers_.size()) throw ContractError("mlp cache does not match network");
    if (grad_output.rows() != output_dim() || grad_output.cols() != cache.inputs.front().cols())
        throw ContractError("mlp output gradient shape mismatch");
    if (param_grad && param_grad->size() != params_.size())
        throw ContractError("mlp parameter gradient size mismatch");
    Eigen::MatrixXd delta = grad_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& v = layers_[l];
        const Eigen::MatrixXd& x = cache.inputs[l];
        if (param_grad) {
            Eigen::Map<Eigen::MatrixXd>(param_grad->data() + v.weight_offset, v.rows, v.cols).noalias() +=
                delta * x.transpose();
            param_grad->segment(v.bias_offset, v.rows) += delta.rowwise().sum();
        }
        Eigen::MatrixXd grad_x = weight(l).transpose() * delta;
        if (l > 0) {
            // x is the activation of the previous layer's pre-activation.
            if (activation_ == Activation::Tanh)
                grad_x.array() *= 1.0 - x.array().square();
            else
                grad_x.array() *= (x.array() > 0.0).cast<double>();
        }
        delta = std::move(grad_x);
    }
    return delta;
}

std::uint64_t Mlp::architecture_hash() const {
    // FNV-1a over the layer sizes and activation tag.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t value) {
        for (int b = 0; b < 8; ++b) {
            h ^= (value >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(sizes_.size());
    for (int s : sizes_) mix(static_cast<std::uint64_t>(s));
    mix(static_cast<std::uint64_t>(activation_));
    return h;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& config) {
    if (grad.size() != params.size() || state.m.size() != params.size())
        throw ContractError("adam state size mismatch");
    state.step += 1;
    state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
    state.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.array().square().matrix();
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    params.array() -= config.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
}

}  // namespace fdrl
