#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fdrl/rng.hpp"

namespace fdrl {

enum class Activation { Tanh, Relu };

// Dense feed-forward network with a linear output layer. All parameters
// live in one flat vector (per layer: weights column-major, then bias) so
// optimizers and checkpoints treat them uniformly.
class Mlp {
public:
    struct Cache {
        std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    };

    Mlp() = default;
    Mlp(std::vector<int> sizes, Activation hidden = Activation::Tanh);

    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    const std::vector<int>& sizes() const { return sizes_; }
    Activation activation() const { return activation_; }
    Eigen::Index parameter_count() const { return params_.size(); }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    // Uniform Glorot initialization; biases start at zero.
    void initialize(Rng& rng);

    // Column-wise batch: input is input_dim x B, output is output_dim x B.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache& cache) const;

    // Backpropagates grad_output (output_dim x B). Adds the batch-summed
    // parameter gradient into *param_grad when non-null and returns the
    // gradient with respect to the input.
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_output,
                             Eigen::VectorXd* param_grad) const;

    // Hash of layer sizes and activation.
    std::uint64_t architecture_hash() const;

private:
    struct LayerView {
        Eigen::Index weight_offset;
        Eigen::Index bias_offset;
        int rows;
        int cols;
    };

    Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

    std::vector<int> sizes_;
    Activation activation_ = Activation::Tanh;
    std::vector<LayerView> layers_;
    Eigen::VectorXd params_;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t step = 0;

    explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// One bias-corrected Adam descent step on params.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& config);

}  // namespace fdrl
