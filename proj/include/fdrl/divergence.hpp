#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>

namespace fdrl {

enum class DivergenceKind { JS, FKL, RKL, GAN, ME };

std::string_view to_string(DivergenceKind kind);
// Accepts upper or lower case tags ("js", "FKL", ...).
DivergenceKind parse_divergence(std::string_view text);

// True for the kinds trained through the KDE density-ratio estimator.
constexpr bool is_f_divergence(DivergenceKind kind) {
    return kind == DivergenceKind::JS || kind == DivergenceKind::FKL || kind == DivergenceKind::RKL;
}

// Lagrangian constant folded into the gradient weights. Empty for GAN/ME.
std::optional<double> lagrangian(DivergenceKind kind);

// Generator function f(t) of the f-divergence D_f(p||q) = int p f(q/p).
double f_value(DivergenceKind kind, double t);
// First derivative f'(t).
double f_prime(DivergenceKind kind, double t);

struct Clamps {
    double eps_p = 1e-12;  // lower clamp on target densities
    double eps_v = 1e-8;   // floor on the volume estimate
};

struct VolumeEstimate {
    double value = 0.0;
    bool degenerate = false;
};

// Importance-sampled integral of the feasibility score under the proposal.
VolumeEstimate estimate_volume(const Eigen::VectorXd& scores, const Eigen::VectorXd& q_prop,
                               const Clamps& clamps = {});

double target_density(double score, double volume, const Clamps& clamps = {});

// Everything the f-divergence estimator needs about one state's resampled
// points. All vectors have length M.
struct SampleBatch {
    Eigen::MatrixXd resampled_points;  // D x M
    Eigen::VectorXd q_hat;             // sigma-KDE density
    Eigen::VectorXd q_prop;            // sigma'-KDE density
    Eigen::VectorXd score;             // radius-weighted feasibility in [0,1]
    Eigen::VectorXd p_hat;             // normalized, clamped target density
    VolumeEstimate volume;

    Eigen::Index size() const { return q_hat.size(); }
    void validate() const;
};

// Fills volume and p_hat from score and q_prop.
void normalize_target(SampleBatch& batch, const Clamps& clamps = {});

// Per-sample weights w_j so that the actor gradient is
// (1/M) sum_j w_j grad_theta log q_hat(a*_j).
Eigen::VectorXd grad_weights(DivergenceKind kind, const SampleBatch& batch);

struct DivergenceEstimate {
    double value = 0.0;
    bool degenerate = false;
};

// (1/M) sum_j (p_j/q'_j) f(q_j/p_j). Logging only.
DivergenceEstimate estimate_divergence(DivergenceKind kind, const SampleBatch& batch);

}  // namespace fdrl
