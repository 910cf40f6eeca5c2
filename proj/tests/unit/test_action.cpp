#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fdrl/action.hpp"
#include "fdrl/errors.hpp"
#include "fdrl/rng.hpp"

using namespace fdrl;

TEST(Action, AxisCase) {
    const auto n = normalize_action({0.2, 0.3, 0.5, 0.0});
    EXPECT_DOUBLE_EQ(n.action.sin_a, 1.0);
    EXPECT_DOUBLE_EQ(n.action.cos_a, 0.0);
    EXPECT_DOUBLE_EQ(n.action.alpha, std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(n.radius, 0.5);
    EXPECT_DOUBLE_EQ(n.action.x, 0.2);
    EXPECT_DOUBLE_EQ(n.action.y, 0.3);
}

TEST(Action, ThreeFourFive) {
    const auto n = normalize_action({0.0, 0.0, 0.3, 0.4});
    EXPECT_DOUBLE_EQ(n.radius, 0.5);
    EXPECT_NEAR(n.action.sin_a, 0.6, 1e-15);
    EXPECT_NEAR(n.action.cos_a, 0.8, 1e-15);
}

TEST(Action, GripperSymmetry) {
    const auto a = normalize_action({0.1, 0.1, -0.3, 0.0});
    const auto b = normalize_action({0.1, 0.1, 0.3, 0.0});
    EXPECT_EQ(a.action.features(), b.action.features());
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
        const auto p = normalize_action({0.5, 0.5, u, v});
        const auto q = normalize_action({0.5, 0.5, -u, -v});
        EXPECT_EQ(p.action.features(), q.action.features());
        EXPECT_NEAR(p.action.sin_a * p.action.sin_a + p.action.cos_a * p.action.cos_a, 1.0, 1e-12);
        EXPECT_GE(p.action.alpha, 0.0);
        EXPECT_LT(p.action.alpha, std::numbers::pi);
        // Folding an already folded action is the identity.
        const auto again = normalize_action({0.5, 0.5, p.action.sin_a, p.action.cos_a});
        EXPECT_NEAR((again.action.features() - p.action.features()).norm(), 0.0, 1e-15);
    }
}

TEST(Action, DegenerateRadius) {
    EXPECT_THROW(normalize_action({0.5, 0.5, 0.0, 0.0}), DegenerateActionError);
    EXPECT_THROW(normalize_action({0.5, 0.5, 1e-7, 0.0}), DegenerateActionError);
    EXPECT_NO_THROW(normalize_action({0.5, 0.5, 1e-7, 0.0}, 1e-8));
}

TEST(Action, JacobianMatchesFiniteDifferences) {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        RawAction a{rng.uniform(), rng.uniform(), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (std::abs(a.u) < 0.05) continue;  // keep away from the fold discontinuity
        const Eigen::Matrix4d j = normalize_jacobian(a);
        for (int c = 0; c < 4; ++c) {
            Eigen::Vector4d p = a.to_vector(), m = a.to_vector();
            p[c] += 1e-6;
            m[c] -= 1e-6;
            const Eigen::Vector4d fd = (normalize_action(RawAction::from_vector(p)).action.features() -
                                        normalize_action(RawAction::from_vector(m)).action.features()) /
                                       2e-6;
            EXPECT_LE((fd - j.col(c)).norm(), 1e-6);
        }
    }
}

TEST(Action, FoldAngle) {
    EXPECT_DOUBLE_EQ(fold_angle(0.0), 0.0);
    EXPECT_NEAR(fold_angle(std::numbers::pi + 0.25), 0.25, 1e-15);
    EXPECT_NEAR(fold_angle(-0.25), std::numbers::pi - 0.25, 1e-15);
    EXPECT_DOUBLE_EQ(fold_angle(std::numbers::pi), 0.0);
    const auto n = NormAction::from_angle(0.1, 0.2, 3 * std::numbers::pi / 2);
    EXPECT_NEAR(n.alpha, std::numbers::pi / 2, 1e-12);
}

TEST(Action, RadiusWeight) {
    EXPECT_EQ(radius_weight(0.5), 1.0);
    EXPECT_NEAR(radius_weight(0.9), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(radius_weight(0.0), std::exp(-0.78125), 1e-15);
    EXPECT_NEAR(radius_weight(0.0), 0.4578, 1e-4);
    for (double d = 0.01; d < 1.0; d += 0.01) {
        EXPECT_LT(radius_weight(0.5 + d), radius_weight(0.5 + d - 0.01));
        EXPECT_NEAR(radius_weight(0.5 + d), radius_weight(0.5 - d), 1e-15);
    }
    const double r = 0.8, h = 1e-6;
    EXPECT_NEAR(radius_log_weight_derivative(r),
                (std::log(radius_weight(r + h)) - std::log(radius_weight(r - h))) / (2 * h), 1e-8);
}
