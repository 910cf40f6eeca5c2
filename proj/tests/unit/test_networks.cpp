#include <gtest/gtest.h>

#include <cmath>

#include "fdrl/errors.hpp"
#include "fdrl/networks.hpp"

using namespace fdrl;

namespace {

NetworkShape small_shape(Activation act = Activation::Tanh) { return {16, 2, act}; }

Actor make_actor(std::uint64_t seed, int action_dim = 2) {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(action_dim, -1.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(action_dim, 2.0);
    Actor actor(3, 4, lo, hi, small_shape());
    Rng rng(seed);
    actor.initialize(rng);
    return actor;
}

}  // namespace

TEST(Actor, OutputsStayInsideBoundsAndAreDeterministic) {
    Actor actor = make_actor(1);
    actor.params() *= 20.0;  // saturate the squash
    Rng rng(2);
    const Eigen::VectorXd s = Eigen::Vector3d(0.1, -0.4, 0.9);
    const Eigen::MatrixXd z = actor.sample_latents(500, rng);
    EXPECT_GE(z.minCoeff(), 0.0);
    EXPECT_LE(z.maxCoeff(), 1.0);
    const Eigen::MatrixXd a = actor.forward(s, z);
    EXPECT_GE(a.minCoeff(), -1.0);
    EXPECT_LE(a.maxCoeff(), 2.0);
    EXPECT_EQ(a, actor.forward(s, z));
}

TEST(Actor, BatchedForwardMatchesPerState) {
    const Actor actor = make_actor(3);
    Rng rng(4);
    const Eigen::MatrixXd z = actor.sample_latents(10, rng);
    Eigen::MatrixXd states(3, 10);
    states.leftCols(5) = Eigen::Vector3d(0.1, 0.2, 0.3).replicate(1, 5);
    states.rightCols(5) = Eigen::Vector3d(-0.5, 0.0, 0.5).replicate(1, 5);
    Actor::Cache cache;
    const Eigen::MatrixXd batched = actor.forward_batch(states, z, cache);
    EXPECT_TRUE(batched.leftCols(5).isApprox(actor.forward(Eigen::Vector3d(0.1, 0.2, 0.3), z.leftCols(5)), 1e-14));
    EXPECT_TRUE(batched.rightCols(5).isApprox(actor.forward(Eigen::Vector3d(-0.5, 0.0, 0.5), z.rightCols(5)), 1e-14));
}

TEST(Actor, ZeroWeightsGiveBiasImage) {
    Actor actor = make_actor(5);
    actor.params().setZero();
    Rng rng(6);
    const Eigen::MatrixXd a = actor.forward(Eigen::Vector3d(1, 2, 3), actor.sample_latents(20, rng));
    // tanh(0) = 0 maps to the middle of the bounds.
    EXPECT_TRUE(a.isApprox(Eigen::MatrixXd::Constant(2, 20, 0.5), 1e-15));
}

TEST(Actor, ParameterGradientMatchesFiniteDifferences) {
    Actor actor = make_actor(7);
    Rng rng(8);
    const Eigen::VectorXd s = Eigen::Vector3d(0.3, 0.1, -0.2);
    const Eigen::MatrixXd z = actor.sample_latents(5, rng);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(2, 5);
    Actor::Cache cache;
    actor.forward(s, z, cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(actor.params().size());
    actor.backward(cache, g, &grad);
    for (Eigen::Index k = 0; k < grad.size(); k += 3) {
        const double saved = actor.params()[k];
        actor.params()[k] = saved + 1e-5;
        const double up = (actor.forward(s, z).array() * g.array()).sum();
        actor.params()[k] = saved - 1e-5;
        const double down = (actor.forward(s, z).array() * g.array()).sum();
        actor.params()[k] = saved;
        const double fd = (up - down) / 2e-5;
        EXPECT_LE(std::abs(fd - grad[k]), 1e-4 * std::max(std::abs(fd), 1e-3));
    }
}

TEST(Actor, GradientThroughKdeMatchesFiniteDifferences) {
    Actor actor = make_actor(9, 1);
    Rng rng(10);
    const Eigen::VectorXd s = Eigen::Vector3d(0.2, 0.5, -0.1);
    const Eigen::MatrixXd z = actor.sample_latents(1, rng);  // single support
    const Eigen::VectorXd bw = Eigen::VectorXd::Constant(1, 0.3);
    Eigen::MatrixXd resampled(1, 6);
    Eigen::VectorXd w(6);
    for (int j = 0; j < 6; ++j) {
        resampled(0, j) = rng.uniform(-1.0, 2.0);
        w[j] = rng.uniform(-1.0, 1.0);
    }
    auto surrogate = [&]() {
        const KdeModel kde(actor.forward(s, z), bw);
        double total = 0.0;
        for (int j = 0; j < 6; ++j) total += w[j] * kde.log_eval(resampled.col(j));
        return total / 6.0;
    };
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(actor.params().size());
    actor_param_grad_through_kde(actor, s, z, w, KdeModel(actor.forward(s, z), bw), resampled, 1.0, &grad);
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
        const double saved = actor.params()[k];
        actor.params()[k] = saved + 1e-5;
        const double up = surrogate();
        actor.params()[k] = saved - 1e-5;
        const double down = surrogate();
        actor.params()[k] = saved;
        const double fd = (up - down) / 2e-5;
        EXPECT_LE(std::abs(fd - grad[k]), 1e-3 * std::max(std::abs(fd), 1e-4)) << k;
    }
    Eigen::VectorXd zero_grad = Eigen::VectorXd::Zero(actor.params().size());
    actor_param_grad_through_kde(actor, s, z, Eigen::VectorXd::Zero(6), KdeModel(actor.forward(s, z), bw), resampled,
                                 1.0, &zero_grad);
    EXPECT_TRUE(zero_grad.isZero(0.0));
}

TEST(Critic, ZeroNetworkIsOneHalf) {
    Critic critic(2, 3, 1e-6, small_shape());
    critic.params().setZero();
    const auto out = critic.forward(Eigen::MatrixXd::Random(5, 7));
    EXPECT_TRUE(out.xi.isApproxToConstant(0.5));
    const Eigen::MatrixXd g = critic.feature_grad(Eigen::MatrixXd::Random(5, 7), Eigen::VectorXd::Ones(7), {});
    EXPECT_TRUE(g.isZero(0.0));
}

TEST(Critic, OutputClampedInsideUnitInterval) {
    Critic critic(2, 2, 1e-6, small_shape());
    Rng rng(11);
    critic.initialize(rng);
    critic.params() *= 50.0;
    const auto out = critic.forward(Eigen::MatrixXd::Random(4, 10000) * 10.0);
    EXPECT_GE(out.xi.minCoeff(), 1e-6);
    EXPECT_LE(out.xi.maxCoeff(), 1.0 - 1e-6);
}

TEST(Critic, CrossEntropyGradientMatchesFiniteDifferences) {
    Critic critic(2, 2, 1e-6, small_shape());
    Rng rng(12);
    critic.initialize(rng);
    for (int instance = 0; instance < 10; ++instance) {
        const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
        Eigen::VectorXd t(3);
        for (int b = 0; b < 3; ++b) t[b] = rng.uniform() < 0.5 ? 0.0 : 1.0;
        Eigen::VectorXd grad;
        const double loss = critic.bce_loss_and_grad(x, t, &grad);
        EXPECT_GE(loss, 0.0);
        for (Eigen::Index k = instance; k < grad.size(); k += 10) {
            const double saved = critic.params()[k];
            critic.params()[k] = saved + 1e-5;
            const double up = critic.bce_loss_and_grad(x, t, nullptr);
            critic.params()[k] = saved - 1e-5;
            const double down = critic.bce_loss_and_grad(x, t, nullptr);
            critic.params()[k] = saved;
            const double fd = (up - down) / 2e-5;
            EXPECT_LE(std::abs(fd - grad[k]), 1e-4 * std::max(std::abs(fd), 1e-4));
        }
    }
}

TEST(Critic, CrossEntropyLabelIdentity) {
    // At the output pre-activation, dL/dz is s - t: the label-1 gradient
    // equals the label-0 gradient times -(1 - s)/s.
    Critic critic(1, 1, 1e-6, small_shape());
    Rng rng(13);
    critic.initialize(rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 1);
    const double s = critic.forward(x).xi[0];
    Eigen::VectorXd g1, g0;
    critic.bce_loss_and_grad(x, Eigen::VectorXd::Ones(1), &g1);
    critic.bce_loss_and_grad(x, Eigen::VectorXd::Zero(1), &g0);
    EXPECT_TRUE(g1.isApprox(g0 * (-(1.0 - s) / s), 1e-10));
}

TEST(Critic, SaturatedCorrectLabelHasTinyGradient) {
    Critic critic(1, 1, 1e-6, small_shape());
    critic.params().setZero();
    // Final bias drives the logit far positive.
    critic.params()[critic.params().size() - 1] = 40.0;
    Eigen::VectorXd grad;
    critic.bce_loss_and_grad(Eigen::MatrixXd::Random(2, 4), Eigen::VectorXd::Ones(4), &grad);
    EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Critic, FeatureGradientsMatchFiniteDifferences) {
    Critic critic(2, 3, 1e-6, small_shape());
    Rng rng(14);
    critic.initialize(rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
    const Eigen::VectorXd c1 = Eigen::Vector3d(1.0, -0.5, 2.0);
    const Eigen::VectorXd c2 = Eigen::Vector3d(0.3, 1.0, -1.0);
    auto objective = [&](const Eigen::MatrixXd& in) {
        const Eigen::VectorXd xi = critic.forward(in).xi;
        return (c1.array() * xi.array().log() + c2.array() * (1.0 - xi.array()).log()).sum();
    };
    const Eigen::MatrixXd g = critic.feature_grad(x, c1, c2);
    ASSERT_EQ(g.rows(), 3);
    for (int b = 0; b < 3; ++b)
        for (int f = 0; f < 3; ++f) {
            Eigen::MatrixXd p = x, m = x;
            p(2 + f, b) += 1e-5;
            m(2 + f, b) -= 1e-5;
            const double fd = (objective(p) - objective(m)) / 2e-5;
            EXPECT_LE(std::abs(fd - g(f, b)), 1e-4 * std::max(std::abs(fd), 1e-3));
        }
    // d log(1 - xi) = -xi/(1 - xi) d log xi
    const Eigen::MatrixXd only_log = critic.feature_grad(x, Eigen::VectorXd::Ones(3), {});
    const Eigen::MatrixXd only_log1m = critic.feature_grad(x, {}, Eigen::VectorXd::Ones(3));
    const Eigen::VectorXd xi = critic.forward(x).xi;
    for (int b = 0; b < 3; ++b)
        EXPECT_TRUE(only_log1m.col(b).isApprox(-xi[b] / (1.0 - xi[b]) * only_log.col(b), 1e-10));
}

TEST(Critic, StackReplicatesState) {
    const Eigen::MatrixXd x = Critic::stack(Eigen::Vector2d(1, 2), Eigen::MatrixXd::Constant(1, 3, 7.0));
    ASSERT_EQ(x.rows(), 3);
    ASSERT_EQ(x.cols(), 3);
    EXPECT_EQ(x(0, 2), 1.0);
    EXPECT_EQ(x(1, 1), 2.0);
    EXPECT_EQ(x(2, 0), 7.0);
}
