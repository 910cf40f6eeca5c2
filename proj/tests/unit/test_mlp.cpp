#include <gtest/gtest.h>

#include <cmath>

#include "fdrl/errors.hpp"
#include "fdrl/mlp.hpp"

using namespace fdrl;

namespace {

// Scalar objective sum(G .* f(X)) and its finite-difference derivative in
// one parameter.
double objective(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
    return (net.forward(x).array() * g.array()).sum();
}

}  // namespace

class MlpGradient : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradient, ParametersMatchFiniteDifferences) {
    Rng rng(1);
    Mlp net({4, 12, 9, 3}, GetParam());
    net.initialize(rng);
    for (Eigen::Index k = 0; k < net.params().size(); ++k) net.params()[k] += 0.05 * rng.normal();
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 6);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(3, 6);
    Mlp::Cache cache;
    net.forward(x, cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
    net.backward(cache, g, &grad);
    const double h = 1e-5;
    for (Eigen::Index k = 0; k < net.parameter_count(); ++k) {
        const double saved = net.params()[k];
        net.params()[k] = saved + h;
        const double up = objective(net, x, g);
        net.params()[k] = saved - h;
        const double down = objective(net, x, g);
        net.params()[k] = saved;
        const double fd = (up - down) / (2 * h);
        EXPECT_LE(std::abs(fd - grad[k]), 1e-4 * std::max(std::abs(fd), 1e-3)) << "parameter " << k;
    }
}

TEST_P(MlpGradient, InputsMatchFiniteDifferences) {
    Rng rng(2);
    Mlp net({3, 10, 10, 2}, GetParam());
    net.initialize(rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(2, 4);
    Mlp::Cache cache;
    net.forward(x, cache);
    const Eigen::MatrixXd gx = net.backward(cache, g, nullptr);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::MatrixXd p = x, m = x;
        p.data()[k] += 1e-5;
        m.data()[k] -= 1e-5;
        const double fd = (objective(net, p, g) - objective(net, m, g)) / 2e-5;
        EXPECT_LE(std::abs(fd - gx.data()[k]), 1e-4 * std::max(std::abs(fd), 1e-3));
    }
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradient, ::testing::Values(Activation::Tanh, Activation::Relu));

TEST(Mlp, TanhMatchesStandardLibrary) {
    Mlp net({1, 1, 1});
    // Identity weights so the hidden activation is visible at the output.
    net.params().setZero();
    net.params()[0] = 1.0;  // layer 0 weight
    net.params()[2] = 1.0;  // layer 1 weight
    for (double z : {-30.0, -3.0, -0.5, -1e-3, 0.0, 1e-3, 0.7, 4.0, 30.0, 800.0, -800.0}) {
        Eigen::MatrixXd x(1, 1);
        x(0, 0) = z;
        EXPECT_NEAR(net.forward(x)(0, 0), std::tanh(z), 1e-15) << z;
    }
}

TEST(Mlp, ZeroNetworkOutputsBias) {
    Mlp net({3, 8, 2});
    net.params().setZero();
    const Eigen::MatrixXd y = net.forward(Eigen::MatrixXd::Random(3, 5));
    EXPECT_TRUE(y.isZero(0.0));
}

TEST(Mlp, GlorotInitIsDeterministicAndBounded) {
    Rng a(7), b(7);
    Mlp n1({5, 16, 4}), n2({5, 16, 4});
    n1.initialize(a);
    n2.initialize(b);
    EXPECT_EQ(n1.params(), n2.params());
    const Eigen::Index first = 5 * 16;
    EXPECT_LE(n1.params().head(first).cwiseAbs().maxCoeff(), std::sqrt(6.0 / 21.0));
    EXPECT_TRUE(n1.params().segment(first, 16).isZero(0.0));
    EXPECT_LE(n1.params().segment(first + 16, 64).cwiseAbs().maxCoeff(), std::sqrt(6.0 / 20.0));
    EXPECT_TRUE(n1.params().tail(4).isZero(0.0));
    EXPECT_NE(n1.architecture_hash(), Mlp({5, 16, 3}).architecture_hash());
    EXPECT_NE(n1.architecture_hash(), Mlp({5, 16, 4}, Activation::Relu).architecture_hash());
    EXPECT_EQ(n1.parameter_count(), 5 * 16 + 16 + 16 * 4 + 4);
}

TEST(Mlp, RejectsShapeMismatch) {
    Mlp net({3, 4, 2});
    EXPECT_THROW(net.forward(Eigen::MatrixXd::Zero(2, 1)), ContractError);
    Mlp::Cache cache;
    net.forward(Eigen::MatrixXd::Zero(3, 2), cache);
    EXPECT_THROW(net.backward(cache, Eigen::MatrixXd::Zero(2, 3), nullptr), ContractError);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
    Eigen::VectorXd p = Eigen::Vector3d(1.0, 2.0, 3.0);
    AdamState s(3);
    adam_step(p, Eigen::Vector3d(0.5, -2.0, 0.0), s, {0.01, 0.9, 0.999, 1e-8});
    EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-9);
    EXPECT_NEAR(p[1], 2.0 + 0.01, 1e-9);
    EXPECT_EQ(p[2], 3.0);
    EXPECT_EQ(s.step, 1);
}

TEST(Adam, ConvergesOnQuadraticBowl) {
    Eigen::VectorXd p = Eigen::Vector2d(3.0, -2.0);
    const Eigen::Vector2d target(0.5, 0.25);
    AdamState s(2);
    int steps = 0;
    while ((p - target).norm() > 1e-6 && steps < 5000) {
        adam_step(p, 2.0 * (p - target), s, {0.01 * std::pow(0.999, steps), 0.9, 0.999, 1e-8});
        ++steps;
    }
    EXPECT_LE((p - target).norm(), 1e-6);
    EXPECT_LE(steps, 5000);
}
