#include "fdrl/action.hpp"

#include <cmath>
#include <numbers>

#include "fdrl/errors.hpp"

namespace fdrl {

double RawAction::radius() const { return std::hypot(u, v); }

RawAction RawAction::from_vector(const Eigen::Ref<const Eigen::VectorXd>& a) {
    return {a[0], a[1], a[2], a[3]};
}

NormAction NormAction::from_angle(double x, double y, double alpha) {
    const double folded = fold_angle(alpha);
    return {x, y, std::sin(folded), std::cos(folded), folded};
}

double fold_angle(double alpha) {
    double folded = std::fmod(alpha, std::numbers::pi);
    if (folded < 0.0) folded += std::numbers::pi;
    if (folded >= std::numbers::pi) folded = 0.0;
    return folded;
}

namespace {

// The pair (sin, cos) represents an angle in [0, pi) iff sin > 0, or
// sin == 0 and cos > 0.
bool needs_flip(double s, double c) { return s < 0.0 || (s == 0.0 && c < 0.0); }

}  // namespace

NormalizedAction normalize_action(const RawAction& raw, double eps_r) {
    const double r = raw.radius();
    if (!(r > eps_r)) throw DegenerateActionError("action radius below threshold");
    double s = raw.u / r;
    double c = raw.v / r;
    if (needs_flip(s, c)) {
        s = -s;
        c = -c;
    }
    double alpha = std::atan2(s, c);
    if (alpha >= std::numbers::pi) alpha = 0.0;
    return {{raw.x, raw.y, s, c, alpha}, r};
}

Eigen::Matrix4d normalize_jacobian(const RawAction& raw, double eps_r) {
    const double r = raw.radius();
    if (!(r > eps_r)) throw DegenerateActionError("action radius below threshold");
    const double sign = needs_flip(raw.u / r, raw.v / r) ? -1.0 : 1.0;
    const double r3 = r * r * r;
    Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    j(2, 2) = sign * raw.v * raw.v / r3;
    j(2, 3) = -sign * raw.u * raw.v / r3;
    j(3, 2) = -sign * raw.u * raw.v / r3;
    j(3, 3) = sign * raw.u * raw.u / r3;
    return j;
}

double radius_weight(double r) {
    const double d = r - kRadiusCenter;
    return std::exp(-d * d / (2.0 * kRadiusStd * kRadiusStd));
}

double radius_log_weight_derivative(double r) {
    return -(r - kRadiusCenter) / (kRadiusStd * kRadiusStd);
}

}  // namespace fdrl
