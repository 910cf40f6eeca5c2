#include "fdrl/divergence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "fdrl/errors.hpp"

namespace fdrl {

std::string_view to_string(DivergenceKind kind) {
    switch (kind) {
        case DivergenceKind::JS: return "js";
        case DivergenceKind::FKL: return "fkl";
        case DivergenceKind::RKL: return "rkl";
        case DivergenceKind::GAN: return "gan";
        case DivergenceKind::ME: return "me";
    }
    return "?";
}

DivergenceKind parse_divergence(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "js") return DivergenceKind::JS;
    if (lower == "fkl") return DivergenceKind::FKL;
    if (lower == "rkl") return DivergenceKind::RKL;
    if (lower == "gan") return DivergenceKind::GAN;
    if (lower == "me") return DivergenceKind::ME;
    throw ConfigError("unknown divergence '" + std::string(text) + "'");
}

std::optional<double> lagrangian(DivergenceKind kind) {
    switch (kind) {
        case DivergenceKind::JS: return 0.0;
        case DivergenceKind::FKL: return 0.0;
        case DivergenceKind::RKL: return -1.0;
        default: return std::nullopt;
    }
}

namespace {

void require_f_kind(DivergenceKind kind) {
    if (!is_f_divergence(kind))
        throw ContractError("divergence kind '" + std::string(to_string(kind)) +
                            "' has no f function");
}

void require_positive(double t) {
    if (!(t > 0.0)) throw DomainError("f-divergence argument must be positive");
}

}  // namespace

double f_value(DivergenceKind kind, double t) {
    require_f_kind(kind);
    require_positive(t);
    switch (kind) {
        case DivergenceKind::JS:
            return 0.5 * ((t + 1.0) * std::log(2.0 / (t + 1.0)) + t * std::log(t));
        case DivergenceKind::FKL: return -std::log(t);
        default: return t * std::log(t);
    }
}

double f_prime(DivergenceKind kind, double t) {
    require_f_kind(kind);
    require_positive(t);
    switch (kind) {
        case DivergenceKind::JS: return 0.5 * std::log(2.0 * t / (t + 1.0));
        case DivergenceKind::FKL: return -1.0 / t;
        default: return std::log(t) + 1.0;
    }
}

VolumeEstimate estimate_volume(const Eigen::VectorXd& scores, const Eigen::VectorXd& q_prop,
                               const Clamps& clamps) {
    if (scores.size() == 0) throw ContractError("volume estimate needs a non-empty batch");
    if (scores.size() != q_prop.size()) throw ContractError("volume estimate length mismatch");
    if ((q_prop.array() <= 0.0).any()) throw ContractError("proposal density must be positive");
    const double v = (scores.array() / q_prop.array()).mean();
    if (!(v >= clamps.eps_v)) return {clamps.eps_v, true};
    return {v, false};
}

double target_density(double score, double volume, const Clamps& clamps) {
    return std::max(score / volume, clamps.eps_p);
}

void SampleBatch::validate() const {
    const auto m = q_hat.size();
    if (q_prop.size() != m || score.size() != m || p_hat.size() != m ||
        (resampled_points.size() > 0 && resampled_points.cols() != m))
        throw ContractError("sample batch arrays differ in length");
    if ((q_hat.array() <= 0.0).any() || (q_prop.array() <= 0.0).any())
        throw ContractError("sample batch densities must be positive");
}

void normalize_target(SampleBatch& batch, const Clamps& clamps) {
    batch.volume = estimate_volume(batch.score, batch.q_prop, clamps);
    batch.p_hat.resize(batch.score.size());
    for (Eigen::Index j = 0; j < batch.score.size(); ++j)
        batch.p_hat[j] = target_density(batch.score[j], batch.volume.value, clamps);
}

Eigen::VectorXd grad_weights(DivergenceKind kind, const SampleBatch& batch) {
    require_f_kind(kind);
    batch.validate();
    const auto& q = batch.q_hat.array();
    const auto& qp = batch.q_prop.array();
    const auto& p = batch.p_hat.array();
    switch (kind) {
        case DivergenceKind::JS: return (q / qp) * 0.5 * (2.0 * q / (p + q)).log();
        case DivergenceKind::FKL: return -p / qp;
        default: return (q / qp) * (q / p).log();
    }
}

DivergenceEstimate estimate_divergence(DivergenceKind kind, const SampleBatch& batch) {
    require_f_kind(kind);
    batch.validate();
    if (batch.volume.degenerate) return {0.0, true};
    double total = 0.0;
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
        const double p = batch.p_hat[j];
        total += p / batch.q_prop[j] * f_value(kind, batch.q_hat[j] / p);
    }
    return {total / static_cast<double>(batch.size()), false};
}

}  // namespace fdrl
