#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fdrl/action.hpp"
#include "fdrl/rng.hpp"

namespace fdrl {

enum class EnvKind { Grasp2d, Bimodal1d, Rings2d };
enum class ShapeKind { H, Eight, T, Spoon, Box };

std::string_view to_string(EnvKind kind);
std::string_view to_string(ShapeKind kind);
EnvKind parse_env(std::string_view text);
ShapeKind parse_shape(std::string_view text);

inline constexpr std::array<ShapeKind, 5> kAllShapes{ShapeKind::H, ShapeKind::Eight, ShapeKind::T,
                                                     ShapeKind::Spoon, ShapeKind::Box};
inline constexpr std::array<ShapeKind, 4> kTrainingShapes{ShapeKind::H, ShapeKind::Eight,
                                                          ShapeKind::T, ShapeKind::Spoon};

// Observation of one environment instance. The toy environments use cx
// (and cy for rings2d) only. Color never influences feasibility.
struct StateDescriptor {
    EnvKind env = EnvKind::Grasp2d;
    ShapeKind shape = ShapeKind::H;
    double cx = 0.5;
    double cy = 0.5;
    double phi = 0.0;
    double scale = 1.0;
    std::array<double, 3> geometry{};
    std::array<double, 3> color{0.5, 0.5, 0.5};

    // Network input vector; length Environment::state_dim().
    Eigen::VectorXd features() const;

    bool operator==(const StateDescriptor&) const = default;
};

// Axis-aligned grid over the oracle coordinates. For the grasp task the
// axes are (x, y, alpha) and alpha wraps with period pi; the toy tasks use
// one or two axes and leave the rest at a single cell.
struct GridSpec {
    std::array<int, 3> cells{1, 1, 1};
    std::array<double, 3> lower{0.0, 0.0, 0.0};
    std::array<double, 3> upper{1.0, 1.0, 1.0};
    bool periodic_last = false;

    std::size_t total() const {
        return static_cast<std::size_t>(cells[0]) * cells[1] * cells[2];
    }
    double center(int axis, int index) const {
        return lower[axis] + (index + 0.5) * (upper[axis] - lower[axis]) / cells[axis];
    }
};

// Critic input derived from a raw action.
struct CriticInput {
    Eigen::VectorXd features;
    double weight = 1.0;  // radius weight; 1 for tasks without a radius
    double radius = 0.0;
    bool valid = true;     // false when the action is degenerate
};

// A deterministic one-step feasibility environment g(s, a) in {0, 1}.
class Environment {
public:
    virtual ~Environment() = default;

    virtual EnvKind kind() const = 0;
    virtual int state_dim() const = 0;
    // Raw actor output dimension (also the KDE dimension).
    virtual int action_dim() const = 0;
    // Critic action-feature dimension.
    virtual int feature_dim() const = 0;

    // Box bounds for raw actor outputs.
    virtual const Eigen::VectorXd& action_lower() const = 0;
    virtual const Eigen::VectorXd& action_upper() const = 0;

    // Training-distribution state.
    virtual StateDescriptor generate_state(Rng& rng) const = 0;

    virtual bool evaluate(const StateDescriptor& state, const Eigen::Ref<const Eigen::VectorXd>& raw) const = 0;

    // Features of the raw action after clipping it to the bounds.
    virtual CriticInput critic_input(const Eigen::Ref<const Eigen::VectorXd>& raw) const = 0;
    // d features / d raw at an in-bounds action.
    virtual Eigen::MatrixXd critic_input_jacobian(const Eigen::Ref<const Eigen::VectorXd>& raw) const = 0;
    // d log weight / d raw at an in-bounds action.
    virtual Eigen::VectorXd log_weight_gradient(const Eigen::Ref<const Eigen::VectorXd>& raw) const = 0;

    // Uniformly random raw action inside the bounds.
    virtual Eigen::VectorXd uniform_action(Rng& rng) const = 0;

    virtual GridSpec default_grid() const = 0;
    virtual GridSpec grid_with_cells(std::array<int, 3> cells) const;
    virtual bool evaluate_grid_point(const StateDescriptor& state, const std::array<double, 3>& point) const = 0;
    // Oracle coordinates of a raw action.
    virtual std::array<double, 3> grid_coords(const Eigen::Ref<const Eigen::VectorXd>& raw) const = 0;

    Eigen::VectorXd clip(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
    bool in_bounds(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
};

// Gripper and tolerance parameters of the grasping rule.
struct GraspSpec {
    double aperture = 0.12;            // l
    double claw_width = 0.02;          // w
    double center_margin_factor = 0.25;  // delta_c as a fraction of limb width
    double angle_margin_deg = 15.0;    // delta_alpha
    double presence_fraction = 0.8;    // rho_min

    void validate() const;
};

// Rotated rectangle in world coordinates.
struct Limb {
    Eigen::Vector2d center;
    Eigen::Vector2d axis;  // unit, along the long side
    double half_length = 0.0;
    double half_width = 0.0;
};

inline constexpr double kGraspLowerBound = 0.11;
inline constexpr double kGraspUpperBound = 0.89;

class GraspEnv final : public Environment {
public:
    explicit GraspEnv(GraspSpec spec = {}, std::vector<ShapeKind> training_shapes = {
                                               kTrainingShapes.begin(), kTrainingShapes.end()});

    EnvKind kind() const override { return EnvKind::Grasp2d; }
    int state_dim() const override { return 16; }
    int action_dim() const override { return 4; }
    int feature_dim() const override { return 4; }
    const Eigen::VectorXd& action_lower() const override { return lower_; }
    const Eigen::VectorXd& action_upper() const override { return upper_; }

    StateDescriptor generate_state(Rng& rng) const override;
    StateDescriptor generate_state(ShapeKind shape, Rng& rng) const;
    // Centered, unrotated, mid-range geometry.
    static StateDescriptor canonical_state(ShapeKind shape);

    bool evaluate(const StateDescriptor& state, const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    bool evaluate(const StateDescriptor& state, const NormAction& action) const;

    CriticInput critic_input(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::MatrixXd critic_input_jacobian(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::VectorXd log_weight_gradient(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::VectorXd uniform_action(Rng& rng) const override;

    GridSpec default_grid() const override;
    bool evaluate_grid_point(const StateDescriptor& state, const std::array<double, 3>& point) const override;
    std::array<double, 3> grid_coords(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;

    const GraspSpec& spec() const { return spec_; }
    const std::vector<ShapeKind>& training_shapes() const { return training_shapes_; }

    // World-space rectangles making up the shape.
    static std::vector<Limb> limbs(const StateDescriptor& state);

private:
    GraspSpec spec_;
    std::vector<ShapeKind> training_shapes_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

// Two feasible intervals of width 0.2 centred at c -/+ 0.5, c in [-0.2, 0.2].
class Bimodal1dEnv final : public Environment {
public:
    Bimodal1dEnv();

    EnvKind kind() const override { return EnvKind::Bimodal1d; }
    int state_dim() const override { return 1; }
    int action_dim() const override { return 1; }
    int feature_dim() const override { return 1; }
    const Eigen::VectorXd& action_lower() const override { return lower_; }
    const Eigen::VectorXd& action_upper() const override { return upper_; }

    StateDescriptor generate_state(Rng& rng) const override;
    static StateDescriptor make_state(double c);
    static bool feasible(double c, double a);

    bool evaluate(const StateDescriptor& state, const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    CriticInput critic_input(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::MatrixXd critic_input_jacobian(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::VectorXd log_weight_gradient(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::VectorXd uniform_action(Rng& rng) const override;

    GridSpec default_grid() const override;
    bool evaluate_grid_point(const StateDescriptor& state, const std::array<double, 3>& point) const override;
    std::array<double, 3> grid_coords(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;

    static constexpr double kFeasibleLength = 0.4;

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

// Annulus 0.4 <= |a - center| <= 0.5 around a state-dependent center.
class Rings2dEnv final : public Environment {
public:
    Rings2dEnv();

    EnvKind kind() const override { return EnvKind::Rings2d; }
    int state_dim() const override { return 2; }
    int action_dim() const override { return 2; }
    int feature_dim() const override { return 2; }
    const Eigen::VectorXd& action_lower() const override { return lower_; }
    const Eigen::VectorXd& action_upper() const override { return upper_; }

    StateDescriptor generate_state(Rng& rng) const override;
    static StateDescriptor make_state(double cx, double cy);

    bool evaluate(const StateDescriptor& state, const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    CriticInput critic_input(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::MatrixXd critic_input_jacobian(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::VectorXd log_weight_gradient(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;
    Eigen::VectorXd uniform_action(Rng& rng) const override;

    GridSpec default_grid() const override;
    bool evaluate_grid_point(const StateDescriptor& state, const std::array<double, 3>& point) const override;
    std::array<double, 3> grid_coords(const Eigen::Ref<const Eigen::VectorXd>& raw) const override;

    static constexpr double kInnerRadius = 0.4;
    static constexpr double kOuterRadius = 0.5;

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

struct EnvOptions {
    GraspSpec grasp;
    std::vector<ShapeKind> shapes{kTrainingShapes.begin(), kTrainingShapes.end()};
};

std::unique_ptr<Environment> make_environment(EnvKind kind, const EnvOptions& options = {});

}  // namespace fdrl
