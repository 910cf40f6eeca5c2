#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "fdrl/rng.hpp"

namespace fdrl {

// Gaussian kernel density estimate with a diagonal bandwidth.
//
// Supports are stored column-wise: supports().col(i) is the i-th point.
// The model is immutable after construction and every member is const,
// so concurrent evaluation is safe.
class KdeModel {
public:
    KdeModel(Eigen::MatrixXd supports, Eigen::VectorXd bandwidth);

    int dim() const { return static_cast<int>(supports_.rows()); }
    int size() const { return static_cast<int>(supports_.cols()); }
    const Eigen::MatrixXd& supports() const { return supports_; }
    const Eigen::VectorXd& bandwidth() const { return bandwidth_; }

    // Same supports, bandwidth multiplied componentwise by `factor`.
    KdeModel rescaled(double factor) const;
    KdeModel with_bandwidth(Eigen::VectorXd bandwidth) const;

    double eval(const Eigen::Ref<const Eigen::VectorXd>& query) const;
    double log_eval(const Eigen::Ref<const Eigen::VectorXd>& query) const;

    // Column-wise batch versions.
    Eigen::VectorXd eval_batch(const Eigen::MatrixXd& queries) const;
    Eigen::VectorXd log_eval_batch(const Eigen::MatrixXd& queries) const;

    // m draws per support; support i owns columns [m*i, m*(i+1)).
    Eigen::MatrixXd sample(int m, Rng& rng) const;

    // d log q(query) / d support_i, one column per support. The query is a
    // constant.
    Eigen::MatrixXd grad_supports(const Eigen::Ref<const Eigen::VectorXd>& query) const;

    // d log q(query) / d query.
    Eigen::VectorXd grad_query(const Eigen::Ref<const Eigen::VectorXd>& query) const;

    // sum_j weights_j * d log q(queries_j) / d support_i, one column per
    // support. Equivalent to accumulating grad_supports over the queries.
    Eigen::MatrixXd weighted_grad_supports(const Eigen::MatrixXd& queries,
                                           const Eigen::VectorXd& weights) const;

    // sum_j weights_j * d log q(supports_j) / d support_i where every
    // support is also a query: both the query and the kernel centre move.
    Eigen::MatrixXd weighted_grad_self(const Eigen::VectorXd& weights) const;

private:
    void check_query(Eigen::Index rows) const;
    // Per-support log kernel values at `query`.
    Eigen::VectorXd log_kernels(const Eigen::Ref<const Eigen::VectorXd>& query) const;
    // N x Q matrix of log kernel values.
    Eigen::MatrixXd log_kernel_matrix(const Eigen::MatrixXd& queries) const;

    Eigen::MatrixXd supports_;
    Eigen::VectorXd bandwidth_;
    Eigen::VectorXd inv_var_;
    double log_norm_ = 0.0;  // log of the kernel normalizer, -sum log(sqrt(2 pi) sigma_d)
};

}  // namespace fdrl
