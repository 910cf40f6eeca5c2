#pragma once

#include <Eigen/Dense>
#include <array>

namespace fdrl {

// Actor head output for the grasping task: position and a scaled angle
// vector (u, v) = r (sin a, cos a).
struct RawAction {
    double x = 0.0;
    double y = 0.0;
    double u = 0.0;
    double v = 0.0;

    double radius() const;
    Eigen::Vector4d to_vector() const { return {x, y, u, v}; }
    static RawAction from_vector(const Eigen::Ref<const Eigen::VectorXd>& a);
};

// Unit-circle form with the angle folded into [0, pi).
struct NormAction {
    double x = 0.0;
    double y = 0.0;
    double sin_a = 0.0;
    double cos_a = 1.0;
    double alpha = 0.0;

    Eigen::Vector4d features() const { return {x, y, sin_a, cos_a}; }
    static NormAction from_angle(double x, double y, double alpha);
};

struct NormalizedAction {
    NormAction action;
    double radius = 0.0;
};

inline constexpr double kDefaultEpsRadius = 1e-6;

// Throws DegenerateActionError when the radius is at most eps_r.
NormalizedAction normalize_action(const RawAction& raw, double eps_r = kDefaultEpsRadius);

// d(features)/d(raw) of normalize_action, 4 x 4, including the fold sign.
Eigen::Matrix4d normalize_jacobian(const RawAction& raw, double eps_r = kDefaultEpsRadius);

// Folds any angle into [0, pi).
double fold_angle(double alpha);

inline constexpr double kRadiusCenter = 0.5;
inline constexpr double kRadiusStd = 0.4;

// Unnormalized Gaussian on the radius, 1 at r = 0.5.
double radius_weight(double r);
// d log radius_weight / dr
double radius_log_weight_derivative(double r);

}  // namespace fdrl
