#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdrl/env.hpp"
#include "fdrl/networks.hpp"
#include "fdrl/rng.hpp"

namespace fdrl {

// Produces `count` raw actions (one per column) for a state.
using ActionSampler = std::function<Eigen::MatrixXd(const StateDescriptor&, int count, Rng&)>;

ActionSampler actor_sampler(const Actor& actor);
ActionSampler uniform_sampler(const Environment& env);

// Indices of the actions kept after dropping the floor(fraction * A)
// lowest-density ones under a KDE built from the batch itself. Ties in
// density drop the earliest index first. Kept indices are ascending.
std::vector<int> action_optimization_keep(const Eigen::MatrixXd& actions, const Eigen::VectorXd& bandwidth,
                                          double fraction);
Eigen::MatrixXd action_optimization(const Eigen::MatrixXd& actions, const Eigen::VectorXd& bandwidth,
                                    double fraction);

struct EvalOptions {
    int states = 256;          // per shape for grasp2d
    int actions = 256;         // per state, before action optimization
    double action_opt = 0.0;   // rejection fraction
    Eigen::VectorXd bandwidth; // KDE bandwidth for action optimization
    std::optional<std::array<int, 3>> grid_cells;  // default: environment grid
    std::vector<ShapeKind> shapes;                  // grasp2d only; empty = all shapes
    int threads = 1;

    void validate(const Environment& env) const;
};

double accuracy(const ActionSampler& sampler, const Environment& env, const EvalOptions& options, Rng& rng);

struct ShapeReport {
    std::string name;                  // shape name, or the env name for toy tasks
    std::vector<double> rank_share;    // rank 1 first
    double failure_share = 0.0;
    double accuracy = 0.0;
    double mean_mode_count = 0.0;      // oracle modes per state
};

struct ModeRankReport {
    int states = 0;
    int actions = 0;  // evaluated actions per state (after rejection)
    double action_opt = 0.0;
    std::vector<ShapeReport> shapes;

    // Throws ContractError unless shares and failures sum to one per shape.
    void validate() const;
    // Columns: shape,rank,share,failure,accuracy. One row per rank.
    void write_csv(std::ostream& out) const;
    void write_summary(std::ostream& out) const;
};

// Per state: sample, optionally reject, map each action to its oracle mode,
// sort mode shares descending and pad with zeros to the largest oracle mode
// count in the group; then average rank-wise over states.
ModeRankReport mode_rank_shares(const ActionSampler& sampler, const Environment& env, const EvalOptions& options,
                                Rng& rng);

}  // namespace fdrl
