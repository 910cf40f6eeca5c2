#include "fdrl/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdrl/errors.hpp"

namespace fdrl {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
    const double top = v.maxCoeff();
    return top + std::log((v.array() - top).exp().sum());
}

}  // namespace

KdeModel::KdeModel(Eigen::MatrixXd supports, Eigen::VectorXd bandwidth)
    : supports_(std::move(supports)), bandwidth_(std::move(bandwidth)) {
    if (supports_.cols() < 1) throw ContractError("kde needs at least one support");
    if (bandwidth_.size() != supports_.rows())
        throw ContractError("kde bandwidth dimension does not match supports");
    if ((bandwidth_.array() <= 0.0).any() || !bandwidth_.allFinite())
        throw ContractError("kde bandwidth entries must be positive");
    inv_var_ = bandwidth_.array().square().inverse();
    log_norm_ = -(bandwidth_.array().log().sum()) -
                0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi);
}

KdeModel KdeModel::rescaled(double factor) const { return {supports_, bandwidth_ * factor}; }

KdeModel KdeModel::with_bandwidth(Eigen::VectorXd bandwidth) const {
    return {supports_, std::move(bandwidth)};
}

void KdeModel::check_query(Eigen::Index rows) const {
    if (rows != supports_.rows()) throw ContractError("kde query dimension mismatch");
}

Eigen::VectorXd KdeModel::log_kernels(const Eigen::Ref<const Eigen::VectorXd>& query) const {
    check_query(query.size());
    const Eigen::MatrixXd diff = supports_.colwise() - query;
    return (-0.5 * (inv_var_.asDiagonal() * diff.array().square().matrix()).colwise().sum().array() +
            log_norm_)
        .matrix()
        .transpose();
}

double KdeModel::log_eval(const Eigen::Ref<const Eigen::VectorXd>& query) const {
    return log_sum_exp(log_kernels(query)) - std::log(static_cast<double>(size()));
}

double KdeModel::eval(const Eigen::Ref<const Eigen::VectorXd>& query) const {
    return log_kernels(query).array().exp().mean();
}

Eigen::MatrixXd KdeModel::log_kernel_matrix(const Eigen::MatrixXd& queries) const {
    check_query(queries.rows());
    // -0.5 |x - a|^2_L = -0.5 x'Lx - 0.5 a'La + a'Lx
    const Eigen::MatrixXd scaled_supports = inv_var_.asDiagonal() * supports_;
    const Eigen::RowVectorXd query_sq =
        (inv_var_.asDiagonal() * queries.array().square().matrix()).colwise().sum();
    const Eigen::VectorXd support_sq =
        (scaled_supports.array() * supports_.array()).colwise().sum().transpose();
    Eigen::MatrixXd out = scaled_supports.transpose() * queries;
    out.colwise() -= 0.5 * support_sq;
    out.rowwise() -= 0.5 * query_sq;
    // The expansion can round slightly above the exact exponent; the exact
    // exponent is never positive.
    out = out.array().min(0.0);
    out.array() += log_norm_;
    return out;
}

namespace {

constexpr Eigen::Index kQueryBlock = 512;

}  // namespace

Eigen::VectorXd KdeModel::log_eval_batch(const Eigen::MatrixXd& queries) const {
    check_query(queries.rows());
    Eigen::VectorXd out(queries.cols());
    const double log_n = std::log(static_cast<double>(size()));
    for (Eigen::Index start = 0; start < queries.cols(); start += kQueryBlock) {
        const Eigen::Index count = std::min(kQueryBlock, queries.cols() - start);
        Eigen::MatrixXd logk = log_kernel_matrix(queries.middleCols(start, count));
        const Eigen::RowVectorXd top = logk.colwise().maxCoeff();
        logk.rowwise() -= top;
        const Eigen::RowVectorXd sums = logk.array().exp().matrix().colwise().sum();
        out.segment(start, count) = (top.array() + sums.array().log() - log_n).transpose();
    }
    return out;
}

Eigen::VectorXd KdeModel::eval_batch(const Eigen::MatrixXd& queries) const {
    return log_eval_batch(queries).array().exp();
}

Eigen::MatrixXd KdeModel::weighted_grad_supports(const Eigen::MatrixXd& queries,
                                                 const Eigen::VectorXd& weights) const {
    check_query(queries.rows());
    if (weights.size() != queries.cols()) throw ContractError("kde weight count mismatch");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim(), size());
    for (Eigen::Index start = 0; start < queries.cols(); start += kQueryBlock) {
        const Eigen::Index count = std::min(kQueryBlock, queries.cols() - start);
        const auto block = queries.middleCols(start, count);
        Eigen::MatrixXd resp = log_kernel_matrix(block);  // N x Q
        const Eigen::RowVectorXd top = resp.colwise().maxCoeff();
        resp.rowwise() -= top;
        resp = resp.array().exp();
        const Eigen::RowVectorXd totals = resp.colwise().sum();
        // c_ij = w_j k_ij / sum_i k_ij
        const Eigen::RowVectorXd scale =
            weights.segment(start, count).transpose().array() / totals.array();
        resp.array().rowwise() *= scale.array();
        // sum_j c_ij (x_j - a_i)
        acc += block * resp.transpose();
        acc -= supports_ * resp.rowwise().sum().asDiagonal();
    }
    return inv_var_.asDiagonal() * acc;
}

Eigen::MatrixXd KdeModel::weighted_grad_self(const Eigen::VectorXd& weights) const {
    if (weights.size() != size()) throw ContractError("kde weight count mismatch");
    // As a centre each a_i receives the support gradient; as a query it
    // receives -sum_k c_ik (a_i - a_k) Lambda.
    Eigen::MatrixXd resp = log_kernel_matrix(supports_);  // N(support) x N(query)
    const Eigen::RowVectorXd top = resp.colwise().maxCoeff();
    resp.rowwise() -= top;
    resp = resp.array().exp();
    const Eigen::RowVectorXd totals = resp.colwise().sum();
    const Eigen::RowVectorXd scale = weights.transpose().array() / totals.array();
    resp.array().rowwise() *= scale.array();
    // support part: sum_j c_ij (a_j - a_i)
    Eigen::MatrixXd grad = supports_ * resp.transpose() - supports_ * resp.rowwise().sum().asDiagonal();
    // query part: for query j, -sum_i c_ij (a_j - a_i)
    grad -= supports_ * resp.colwise().sum().asDiagonal() - supports_ * resp;
    return inv_var_.asDiagonal() * grad;
}

Eigen::MatrixXd KdeModel::sample(int m, Rng& rng) const {
    if (m < 1) throw ContractError("kde sample count per support must be >= 1");
    const int n = size();
    Eigen::MatrixXd out(dim(), static_cast<Eigen::Index>(m) * n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < m; ++k) {
            const Eigen::Index col = static_cast<Eigen::Index>(i) * m + k;
            for (int d = 0; d < dim(); ++d) out(d, col) = supports_(d, i) + bandwidth_[d] * rng.normal();
        }
    }
    return out;
}

Eigen::MatrixXd KdeModel::grad_supports(const Eigen::Ref<const Eigen::VectorXd>& query) const {
    const Eigen::VectorXd logk = log_kernels(query);
    const double log_total = log_sum_exp(logk);
    // k_i / (N q) = exp(logk_i - logsumexp)
    const Eigen::ArrayXd resp = (logk.array() - log_total).exp();
    Eigen::MatrixXd diff = (-supports_).colwise() + query;  // query - a_i
    diff = inv_var_.asDiagonal() * diff;
    return diff.array().rowwise() * resp.transpose();
}

Eigen::VectorXd KdeModel::grad_query(const Eigen::Ref<const Eigen::VectorXd>& query) const {
    return -grad_supports(query).rowwise().sum();
}

}  // namespace fdrl
