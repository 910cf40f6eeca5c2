#include <gtest/gtest.h>

#include <sstream>

#include "fdrl/errors.hpp"
#include "fdrl/eval.hpp"
#include "fdrl/grid.hpp"

using namespace fdrl;

namespace {

// Uniform over the feasible set of bimodal1d, both intervals equally likely.
ActionSampler feasible_uniform() {
    return [](const StateDescriptor& s, int count, Rng& rng) {
        Eigen::MatrixXd a(1, count);
        for (int i = 0; i < count; ++i) {
            const double centre = s.cx + (rng.uniform() < 0.5 ? -0.5 : 0.5);
            a(0, i) = rng.uniform(centre - 0.1, centre + 0.1);
        }
        return a;
    };
}

EvalOptions small_options(int states, int actions) {
    EvalOptions o;
    o.states = states;
    o.actions = actions;
    o.bandwidth = Eigen::VectorXd::Constant(1, 0.02);
    return o;
}

}  // namespace

TEST(ActionOptimization, ZeroFractionIsIdentity) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(2, 20);
    EXPECT_EQ(action_optimization(a, Eigen::Vector2d(0.1, 0.1), 0.0), a);
}

TEST(ActionOptimization, DropsTheOutlier) {
    // floor(0.1 * 11) = 1 rejection.
    Eigen::MatrixXd a(1, 11);
    for (int i = 0; i < 11; ++i) a(0, i) = 0.01 * i;
    a(0, 4) = 5.0;
    EXPECT_EQ(action_optimization_keep(a, Eigen::VectorXd::Constant(1, 0.05), 0.09).size(), 11u);
    const auto keep = action_optimization_keep(a, Eigen::VectorXd::Constant(1, 0.05), 0.1);
    ASSERT_EQ(keep.size(), 10u);
    EXPECT_EQ(std::find(keep.begin(), keep.end(), 4), keep.end());
    EXPECT_TRUE(std::is_sorted(keep.begin(), keep.end()));
}

TEST(ActionOptimization, TiesDropEarliest) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 10);
    const auto keep = action_optimization_keep(a, Eigen::VectorXd::Constant(1, 0.1), 0.25);
    EXPECT_EQ(keep, (std::vector<int>{2, 3, 4, 5, 6, 7, 8, 9}));
    EXPECT_THROW(action_optimization_keep(a, Eigen::VectorXd::Constant(1, 0.1), 1.0), ContractError);
}

TEST(Accuracy, UniformActorMatchesFeasibleFraction) {
    const Bimodal1dEnv env;
    Rng rng(1);
    const double acc = accuracy(uniform_sampler(env), env, small_options(400, 250), rng);
    EXPECT_NEAR(acc, 0.2, 0.01);
}

TEST(Accuracy, GridOracleActorIsNearlyPerfect) {
    const GraspEnv env;
    // Replays centres of feasible grid cells for each state.
    ActionSampler oracle = [&env](const StateDescriptor& s, int count, Rng& rng) {
        const auto grid = feasible_grid(env, s);
        std::vector<std::size_t> feasible;
        for (std::size_t i = 0; i < grid.cells.size(); ++i)
            if (grid.cells[i]) feasible.push_back(i);
        Eigen::MatrixXd a(4, count);
        const auto& n = grid.spec.cells;
        for (int c = 0; c < count; ++c) {
            const std::size_t idx = feasible[rng.index(feasible.size())];
            const int ia = static_cast<int>(idx % n[2]);
            const int iy = static_cast<int>((idx / n[2]) % n[1]);
            const int ix = static_cast<int>(idx / (static_cast<std::size_t>(n[1]) * n[2]));
            const double alpha = grid.spec.center(2, ia);
            a.col(c) << grid.spec.center(0, ix), grid.spec.center(1, iy), 0.5 * std::sin(alpha),
                0.5 * std::cos(alpha);
        }
        return a;
    };
    EvalOptions o = small_options(8, 200);
    o.shapes = {ShapeKind::H};
    Rng rng(2);
    EXPECT_GE(accuracy(oracle, env, o, rng), 0.99);
}

TEST(ModeRanks, SingleFixedActionCollapsesToRankOne) {
    const Bimodal1dEnv env;
    ActionSampler fixed = [](const StateDescriptor& s, int count, Rng&) {
        return Eigen::MatrixXd::Constant(1, count, s.cx + 0.5);
    };
    Rng rng(3);
    const auto report = mode_rank_shares(fixed, env, small_options(20, 30), rng);
    ASSERT_EQ(report.shapes.size(), 1u);
    const auto& r = report.shapes[0];
    ASSERT_EQ(r.rank_share.size(), 2u);
    EXPECT_DOUBLE_EQ(r.rank_share[0], 1.0);
    EXPECT_DOUBLE_EQ(r.rank_share[1], 0.0);
    EXPECT_DOUBLE_EQ(r.failure_share, 0.0);
    EXPECT_DOUBLE_EQ(r.mean_mode_count, 2.0);
    EXPECT_NO_THROW(report.validate());
}

TEST(ModeRanks, BalancedActorSplitsEvenly) {
    const Bimodal1dEnv env;
    Rng rng(4);
    const auto report = mode_rank_shares(feasible_uniform(), env, small_options(100, 400), rng);
    const auto& r = report.shapes[0];
    EXPECT_NEAR(r.rank_share[0], 0.5, 0.03);
    EXPECT_NEAR(r.rank_share[1], 0.5, 0.03);
    EXPECT_GE(r.rank_share[0], r.rank_share[1]);
    EXPECT_NEAR(r.accuracy, 1.0, 1e-12);
}

TEST(ModeRanks, SharesPartitionTheActions) {
    const Bimodal1dEnv env;
    Rng rng(5);
    EvalOptions o = small_options(30, 64);
    o.action_opt = 0.1;
    const auto report = mode_rank_shares(uniform_sampler(env), env, o, rng);
    const auto& r = report.shapes[0];
    double total = r.failure_share;
    for (double s : r.rank_share) total += s;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(r.accuracy, 1.0 - r.failure_share, 1e-12);
    EXPECT_EQ(report.actions, 64 - 6);

    std::ostringstream csv;
    report.write_csv(csv);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "shape,rank,share,failure,accuracy");
    ModeRankReport broken = report;
    broken.shapes[0].failure_share += 0.1;
    EXPECT_THROW(broken.validate(), ContractError);
}

TEST(ModeRanks, ParallelMatchesSerial) {
    const GraspEnv env;
    EvalOptions o = small_options(4, 32);
    o.shapes = {ShapeKind::H, ShapeKind::T};
    o.grid_cells = std::array<int, 3>{24, 24, 12};
    Rng a(6), b(6);
    const auto serial = mode_rank_shares(uniform_sampler(env), env, o, a);
    o.threads = 3;
    const auto parallel = mode_rank_shares(uniform_sampler(env), env, o, b);
    ASSERT_EQ(serial.shapes.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(serial.shapes[k].rank_share, parallel.shapes[k].rank_share);
        EXPECT_EQ(serial.shapes[k].failure_share, parallel.shapes[k].failure_share);
    }
}

TEST(EvalOptions, RejectsBadCounts) {
    const Bimodal1dEnv env;
    EvalOptions o = small_options(0, 10);
    EXPECT_THROW(o.validate(env), ConfigError);
    o = small_options(10, 0);
    EXPECT_THROW(o.validate(env), ConfigError);
    o = small_options(10, 10);
    o.action_opt = -0.1;
    EXPECT_THROW(o.validate(env), ConfigError);
}
