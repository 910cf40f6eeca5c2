#include "fdrl/env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "fdrl/errors.hpp"

namespace fdrl {

namespace {

std::string lowered(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::Grasp2d: return "grasp2d";
        case EnvKind::Bimodal1d: return "bimodal1d";
        case EnvKind::Rings2d: return "rings2d";
    }
    return "?";
}

std::string_view to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::H: return "H";
        case ShapeKind::Eight: return "8";
        case ShapeKind::T: return "T";
        case ShapeKind::Spoon: return "Spoon";
        case ShapeKind::Box: return "Box";
    }
    return "?";
}

EnvKind parse_env(std::string_view text) {
    const std::string s = lowered(text);
    if (s == "grasp2d") return EnvKind::Grasp2d;
    if (s == "bimodal1d") return EnvKind::Bimodal1d;
    if (s == "rings2d") return EnvKind::Rings2d;
    throw ConfigError("unknown environment '" + std::string(text) + "'");
}

ShapeKind parse_shape(std::string_view text) {
    const std::string s = lowered(text);
    if (s == "h") return ShapeKind::H;
    if (s == "8" || s == "eight") return ShapeKind::Eight;
    if (s == "t") return ShapeKind::T;
    if (s == "spoon") return ShapeKind::Spoon;
    if (s == "box") return ShapeKind::Box;
    throw ConfigError("unknown shape '" + std::string(text) + "'");
}

Eigen::VectorXd StateDescriptor::features() const {
    switch (env) {
        case EnvKind::Bimodal1d: return Eigen::VectorXd::Constant(1, cx);
        case EnvKind::Rings2d: return Eigen::Vector2d(cx, cy);
        case EnvKind::Grasp2d: break;
    }
    Eigen::VectorXd f = Eigen::VectorXd::Zero(16);
    f[static_cast<int>(shape)] = 1.0;
    f[5] = cx;
    f[6] = cy;
    f[7] = std::cos(phi);
    f[8] = std::sin(phi);
    f[9] = scale;
    for (int i = 0; i < 3; ++i) {
        f[10 + i] = geometry[i];
        f[13 + i] = color[i];
    }
    return f;
}

GridSpec Environment::grid_with_cells(std::array<int, 3> cells) const {
    GridSpec spec = default_grid();
    for (int axis = 0; axis < 3; ++axis) {
        if (cells[axis] < 1) throw ConfigError("grid resolution entries must be >= 1");
        spec.cells[axis] = cells[axis];
    }
    return spec;
}

Eigen::VectorXd Environment::clip(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    return raw.cwiseMax(action_lower()).cwiseMin(action_upper());
}

bool Environment::in_bounds(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    return (raw.array() >= action_lower().array()).all() && (raw.array() <= action_upper().array()).all();
}

// ---------------------------------------------------------------- bimodal1d

Bimodal1dEnv::Bimodal1dEnv()
    : lower_(Eigen::VectorXd::Constant(1, -1.0)), upper_(Eigen::VectorXd::Constant(1, 1.0)) {}

StateDescriptor Bimodal1dEnv::make_state(double c) {
    StateDescriptor s;
    s.env = EnvKind::Bimodal1d;
    s.cx = c;
    s.cy = 0.0;
    return s;
}

StateDescriptor Bimodal1dEnv::generate_state(Rng& rng) const { return make_state(rng.uniform(-0.2, 0.2)); }

bool Bimodal1dEnv::feasible(double c, double a) {
    return std::abs(a - (c - 0.5)) < 0.1 || std::abs(a - (c + 0.5)) < 0.1;
}

bool Bimodal1dEnv::evaluate(const StateDescriptor& state, const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    if (raw.size() != 1) throw ContractError("bimodal1d action must have one component");
    if (!in_bounds(raw)) return false;
    return feasible(state.cx, raw[0]);
}

CriticInput Bimodal1dEnv::critic_input(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    return {clip(raw), 1.0, 0.0, true};
}

Eigen::MatrixXd Bimodal1dEnv::critic_input_jacobian(const Eigen::Ref<const Eigen::VectorXd>&) const {
    return Eigen::MatrixXd::Identity(1, 1);
}

Eigen::VectorXd Bimodal1dEnv::log_weight_gradient(const Eigen::Ref<const Eigen::VectorXd>&) const {
    return Eigen::VectorXd::Zero(1);
}

Eigen::VectorXd Bimodal1dEnv::uniform_action(Rng& rng) const {
    return Eigen::VectorXd::Constant(1, rng.uniform(-1.0, 1.0));
}

GridSpec Bimodal1dEnv::default_grid() const {
    GridSpec g;
    g.cells = {400, 1, 1};
    g.lower = {-1.0, 0.0, 0.0};
    g.upper = {1.0, 1.0, 1.0};
    return g;
}

bool Bimodal1dEnv::evaluate_grid_point(const StateDescriptor& state, const std::array<double, 3>& point) const {
    return feasible(state.cx, point[0]);
}

std::array<double, 3> Bimodal1dEnv::grid_coords(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    return {raw[0], 0.5, 0.5};
}

// ------------------------------------------------------------------ rings2d

Rings2dEnv::Rings2dEnv()
    : lower_(Eigen::Vector2d::Constant(-0.1)), upper_(Eigen::Vector2d::Constant(1.1)) {}

StateDescriptor Rings2dEnv::make_state(double cx, double cy) {
    StateDescriptor s;
    s.env = EnvKind::Rings2d;
    s.cx = cx;
    s.cy = cy;
    return s;
}

StateDescriptor Rings2dEnv::generate_state(Rng& rng) const {
    const double cx = rng.uniform(0.45, 0.55);
    const double cy = rng.uniform(0.45, 0.55);
    return make_state(cx, cy);
}

namespace {

bool in_ring(double cx, double cy, double x, double y) {
    const double d = std::hypot(x - cx, y - cy);
    return d >= Rings2dEnv::kInnerRadius && d <= Rings2dEnv::kOuterRadius;
}

}  // namespace

bool Rings2dEnv::evaluate(const StateDescriptor& state, const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    if (raw.size() != 2) throw ContractError("rings2d action must have two components");
    if (!in_bounds(raw)) return false;
    return in_ring(state.cx, state.cy, raw[0], raw[1]);
}

CriticInput Rings2dEnv::critic_input(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    return {clip(raw), 1.0, 0.0, true};
}

Eigen::MatrixXd Rings2dEnv::critic_input_jacobian(const Eigen::Ref<const Eigen::VectorXd>&) const {
    return Eigen::MatrixXd::Identity(2, 2);
}

Eigen::VectorXd Rings2dEnv::log_weight_gradient(const Eigen::Ref<const Eigen::VectorXd>&) const {
    return Eigen::VectorXd::Zero(2);
}

Eigen::VectorXd Rings2dEnv::uniform_action(Rng& rng) const {
    const double x = rng.uniform(-0.1, 1.1);
    const double y = rng.uniform(-0.1, 1.1);
    return Eigen::Vector2d(x, y);
}

GridSpec Rings2dEnv::default_grid() const {
    GridSpec g;
    g.cells = {120, 120, 1};
    g.lower = {-0.1, -0.1, 0.0};
    g.upper = {1.1, 1.1, 1.0};
    return g;
}

bool Rings2dEnv::evaluate_grid_point(const StateDescriptor& state, const std::array<double, 3>& point) const {
    return in_ring(state.cx, state.cy, point[0], point[1]);
}

std::array<double, 3> Rings2dEnv::grid_coords(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    return {raw[0], raw[1], 0.5};
}

std::unique_ptr<Environment> make_environment(EnvKind kind, const EnvOptions& options) {
    switch (kind) {
        case EnvKind::Grasp2d: return std::make_unique<GraspEnv>(options.grasp, options.shapes);
        case EnvKind::Bimodal1d: return std::make_unique<Bimodal1dEnv>();
        case EnvKind::Rings2d: return std::make_unique<Rings2dEnv>();
    }
    throw ConfigError("unknown environment kind");
}

}  // namespace fdrl
