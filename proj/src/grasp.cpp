#include <cmath>
#include <numbers>

#include "fdrl/env.hpp"
#include "fdrl/errors.hpp"

namespace fdrl {

namespace {

struct Range {
    double lo;
    double hi;
    double mid() const { return 0.5 * (lo + hi); }
};

// Geometry parameter ranges in shape-local units (before scaling):
//   H:     limb width, height, distance between the vertical centre lines
//   8:     limb width, outer width, outer height of each ring
//   T:     limb width, stem length, bar length
//   Spoon: handle width, handle length, head width
//   Box:   limb width, outer width, outer height
std::array<Range, 3> geometry_ranges(ShapeKind shape) {
    switch (shape) {
        case ShapeKind::H: return {{{0.04, 0.06}, {0.36, 0.44}, {0.27, 0.33}}};
        case ShapeKind::Eight: return {{{0.04, 0.06}, {0.20, 0.26}, {0.16, 0.20}}};
        case ShapeKind::T: return {{{0.04, 0.06}, {0.26, 0.34}, {0.26, 0.34}}};
        case ShapeKind::Spoon: return {{{0.03, 0.05}, {0.26, 0.34}, {0.06, 0.075}}};
        case ShapeKind::Box: return {{{0.04, 0.06}, {0.28, 0.34}, {0.22, 0.28}}};
    }
    throw ContractError("unknown shape");
}

constexpr Range kScale{0.85, 1.15};
constexpr Range kCenter{0.36, 0.64};
constexpr double kSpoonHeadAspect = 1.8;

struct LocalRect {
    double x;
    double y;
    bool vertical;  // long side along local y
    double half_length;
    double half_width;
};

std::vector<LocalRect> local_rects(const StateDescriptor& s) {
    const double w = s.geometry[0];
    const double hw = 0.5 * w;
    switch (s.shape) {
        case ShapeKind::H: {
            const double height = s.geometry[1];
            const double span = s.geometry[2];
            return {{-0.5 * span, 0.0, true, 0.5 * height, hw},
                    {0.5 * span, 0.0, true, 0.5 * height, hw},
                    {0.0, 0.0, false, 0.5 * span, hw}};
        }
        case ShapeKind::Eight: {
            const double a = 0.5 * s.geometry[1];
            const double b = s.geometry[2] - hw;  // half of total height 2*Hr - w
            return {{-(a - hw), 0.0, true, b, hw},
                    {a - hw, 0.0, true, b, hw},
                    {0.0, b - hw, false, a, hw},
                    {0.0, 0.0, false, a, hw},
                    {0.0, -(b - hw), false, a, hw}};
        }
        case ShapeKind::T: {
            const double stem = s.geometry[1];
            const double bar = s.geometry[2];
            // Centred on the middle of the stem; the bar sits on its top end.
            return {{0.0, 0.0, true, 0.5 * stem, hw}, {0.0, 0.5 * stem, false, 0.5 * bar, hw}};
        }
        case ShapeKind::Spoon: {
            const double handle = s.geometry[1];
            const double head_w = s.geometry[2];
            const double head_l = kSpoonHeadAspect * head_w;
            const double overlap = 0.01;
            const double shift = 0.5 * (head_l - overlap - handle);
            return {{0.0, -0.5 * handle - shift, true, 0.5 * handle, hw},
                    {0.0, 0.5 * head_l - overlap - shift, true, 0.5 * head_l, 0.5 * head_w}};
        }
        case ShapeKind::Box: {
            const double a = 0.5 * s.geometry[1];
            const double b = 0.5 * s.geometry[2];
            return {{-(a - hw), 0.0, true, b, hw},
                    {a - hw, 0.0, true, b, hw},
                    {0.0, b - hw, false, a, hw},
                    {0.0, -(b - hw), false, a, hw}};
        }
    }
    throw ContractError("unknown shape");
}

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

struct Box2 {
    Eigen::Vector2d center;
    Eigen::Vector2d axis;  // unit
    double half_a;         // along axis
    double half_b;         // along perp(axis)
};

double projected_radius(const Box2& b, const Eigen::Vector2d& direction) {
    return b.half_a * std::abs(b.axis.dot(direction)) + b.half_b * std::abs(perp(b.axis).dot(direction));
}

// Separating-axis test; touching boxes count as intersecting.
bool intersects(const Box2& p, const Box2& q) {
    const Eigen::Vector2d d = q.center - p.center;
    for (const Eigen::Vector2d& axis : {p.axis, perp(p.axis), q.axis, perp(q.axis)}) {
        if (std::abs(d.dot(axis)) > projected_radius(p, axis) + projected_radius(q, axis)) return false;
    }
    return true;
}

Box2 as_box(const Limb& limb) { return {limb.center, limb.axis, limb.half_length, limb.half_width}; }

// Fraction of tau in [-h, h] with |s0 + tau * slope| <= half_length.
double covered_fraction(double s0, double slope, double half_length, double h) {
    if (std::abs(slope) < 1e-12) return std::abs(s0) <= half_length ? 1.0 : 0.0;
    double t0 = (-half_length - s0) / slope;
    double t1 = (half_length - s0) / slope;
    if (t0 > t1) std::swap(t0, t1);
    const double lo = std::max(t0, -h);
    const double hi = std::min(t1, h);
    return std::max(0.0, hi - lo) / (2.0 * h);
}

}  // namespace

void GraspSpec::validate() const {
    if (!(aperture > claw_width && claw_width > 0.0))
        throw ConfigError("grasp spec requires aperture > claw width > 0");
    if (!(center_margin_factor > 0.0 && angle_margin_deg > 0.0 && presence_fraction > 0.0 &&
          presence_fraction <= 1.0))
        throw ConfigError("grasp margins must be positive");
}

GraspEnv::GraspEnv(GraspSpec spec, std::vector<ShapeKind> training_shapes)
    : spec_(spec),
      training_shapes_(std::move(training_shapes)),
      lower_(Eigen::Vector4d(kGraspLowerBound, kGraspLowerBound, -1.0, -1.0)),
      upper_(Eigen::Vector4d(kGraspUpperBound, kGraspUpperBound, 1.0, 1.0)) {
    spec_.validate();
    if (training_shapes_.empty()) throw ConfigError("grasp environment needs at least one training shape");
}

StateDescriptor GraspEnv::canonical_state(ShapeKind shape) {
    StateDescriptor s;
    s.env = EnvKind::Grasp2d;
    s.shape = shape;
    s.cx = 0.5;
    s.cy = 0.5;
    s.phi = 0.0;
    s.scale = 1.0;
    const auto ranges = geometry_ranges(shape);
    for (int i = 0; i < 3; ++i) s.geometry[i] = ranges[i].mid();
    return s;
}

StateDescriptor GraspEnv::generate_state(ShapeKind shape, Rng& rng) const {
    StateDescriptor s;
    s.env = EnvKind::Grasp2d;
    s.shape = shape;
    s.cx = rng.uniform(kCenter.lo, kCenter.hi);
    s.cy = rng.uniform(kCenter.lo, kCenter.hi);
    s.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.scale = rng.uniform(kScale.lo, kScale.hi);
    const auto ranges = geometry_ranges(shape);
    for (int i = 0; i < 3; ++i) s.geometry[i] = rng.uniform(ranges[i].lo, ranges[i].hi);
    for (double& c : s.color) c = rng.uniform();
    return s;
}

StateDescriptor GraspEnv::generate_state(Rng& rng) const {
    const ShapeKind shape = training_shapes_[rng.index(training_shapes_.size())];
    return generate_state(shape, rng);
}

std::vector<Limb> GraspEnv::limbs(const StateDescriptor& state) {
    const Eigen::Rotation2Dd rot(state.phi);
    const Eigen::Vector2d origin(state.cx, state.cy);
    std::vector<Limb> out;
    for (const LocalRect& r : local_rects(state)) {
        Limb limb;
        limb.center = origin + state.scale * (rot * Eigen::Vector2d(r.x, r.y));
        limb.axis = rot * (r.vertical ? Eigen::Vector2d(0.0, 1.0) : Eigen::Vector2d(1.0, 0.0));
        limb.half_length = state.scale * r.half_length;
        limb.half_width = state.scale * r.half_width;
        out.push_back(limb);
    }
    return out;
}

bool GraspEnv::evaluate(const StateDescriptor& state, const NormAction& action) const {
    if (action.x < kGraspLowerBound || action.x > kGraspUpperBound || action.y < kGraspLowerBound ||
        action.y > kGraspUpperBound)
        return false;
    const Eigen::Vector2d p(action.x, action.y);
    const Eigen::Vector2d closing(action.cos_a, action.sin_a);
    const Eigen::Vector2d across = perp(closing);
    const double cos_margin = std::cos(spec_.angle_margin_deg * std::numbers::pi / 180.0);
    const double half_w = 0.5 * spec_.claw_width;
    const auto shape = limbs(state);

    bool aligned_limb = false;
    for (const Limb& limb : shape) {
        const Eigen::Vector2d normal = perp(limb.axis);
        if (std::abs(closing.dot(normal)) < cos_margin) continue;
        const Eigen::Vector2d d = p - limb.center;
        if (std::abs(normal.dot(d)) > spec_.center_margin_factor * 2.0 * limb.half_width) continue;
        const double presence =
            covered_fraction(limb.axis.dot(d), limb.axis.dot(across), limb.half_length, half_w);
        if (presence < spec_.presence_fraction) continue;
        aligned_limb = true;
        break;
    }
    if (!aligned_limb) return false;

    const double offset = 0.5 * spec_.aperture + half_w;
    for (double side : {-1.0, 1.0}) {
        const Box2 claw{p + side * offset * closing, closing, half_w, half_w};
        for (const Limb& limb : shape)
            if (intersects(claw, as_box(limb))) return false;
    }
    return true;
}

bool GraspEnv::evaluate(const StateDescriptor& state, const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    if (raw.size() != 4) throw ContractError("grasp action must have four components");
    if (!in_bounds(raw)) return false;
    const RawAction a = RawAction::from_vector(raw);
    try {
        return evaluate(state, normalize_action(a).action);
    } catch (const DegenerateActionError&) {
        return false;
    }
}

CriticInput GraspEnv::critic_input(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    const RawAction a = RawAction::from_vector(clip(raw));
    try {
        const auto n = normalize_action(a);
        return {n.action.features(), radius_weight(n.radius), n.radius, true};
    } catch (const DegenerateActionError&) {
        return {Eigen::Vector4d(a.x, a.y, 0.0, 1.0), 0.0, a.radius(), false};
    }
}

Eigen::MatrixXd GraspEnv::critic_input_jacobian(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    try {
        return normalize_jacobian(RawAction::from_vector(raw));
    } catch (const DegenerateActionError&) {
        return Eigen::MatrixXd::Zero(4, 4);
    }
}

Eigen::VectorXd GraspEnv::log_weight_gradient(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    const RawAction a = RawAction::from_vector(raw);
    const double r = a.radius();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(4);
    if (r <= kDefaultEpsRadius) return g;
    const double dr = radius_log_weight_derivative(r);
    g[2] = dr * a.u / r;
    g[3] = dr * a.v / r;
    return g;
}

Eigen::VectorXd GraspEnv::uniform_action(Rng& rng) const {
    Eigen::VectorXd a(4);
    for (int i = 0; i < 4; ++i) a[i] = rng.uniform(lower_[i], upper_[i]);
    return a;
}

GridSpec GraspEnv::default_grid() const {
    GridSpec g;
    g.cells = {64, 64, 32};
    g.lower = {kGraspLowerBound, kGraspLowerBound, 0.0};
    g.upper = {kGraspUpperBound, kGraspUpperBound, std::numbers::pi};
    g.periodic_last = true;
    return g;
}

bool GraspEnv::evaluate_grid_point(const StateDescriptor& state, const std::array<double, 3>& point) const {
    return evaluate(state, NormAction::from_angle(point[0], point[1], point[2]));
}

std::array<double, 3> GraspEnv::grid_coords(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    const RawAction a = RawAction::from_vector(raw);
    if (a.radius() <= kDefaultEpsRadius) return {a.x, a.y, 0.0};
    return {a.x, a.y, normalize_action(a).action.alpha};
}

}  // namespace fdrl
