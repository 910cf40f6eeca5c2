#include "selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "fdrl/divergence.hpp"
#include "fdrl/env.hpp"
#include "fdrl/grid.hpp"
#include "fdrl/kde.hpp"
#include "fdrl/mlp.hpp"
#include "fdrl/replay.hpp"

using namespace fdrl;

namespace {

struct Suite {
    std::string name;
    std::function<std::string()> run;  // empty string on success
};

std::string check_divergences() {
    for (auto kind : {DivergenceKind::JS, DivergenceKind::FKL, DivergenceKind::RKL})
        if (f_value(kind, 1.0) != 0.0) return "f(1) != 0 for " + std::string(to_string(kind));
    if (f_prime(DivergenceKind::JS, 1.0) != 0.0 || f_prime(DivergenceKind::FKL, 1.0) != -1.0 ||
        f_prime(DivergenceKind::RKL, 1.0) != 1.0)
        return "f'(1) mismatch";
    return {};
}

std::string check_kde_normalization() {
    Rng rng(7);
    Eigen::MatrixXd supports(2, 64);
    for (Eigen::Index i = 0; i < supports.size(); ++i) supports.data()[i] = rng.uniform();
    const KdeModel kde(supports, Eigen::Vector2d(0.05, 0.05));
    const int n = 400;
    const double h = 2.0 / n;
    Eigen::MatrixXd queries(2, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) queries.col(i * n + j) << -0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h;
    const double integral = kde.eval_batch(queries).sum() * h * h;
    if (std::abs(integral - 1.0) > 0.01) return "2-D integral " + std::to_string(integral);
    return {};
}

std::string check_kde_gradients() {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd supports(2, 8);
        for (Eigen::Index i = 0; i < supports.size(); ++i) supports.data()[i] = rng.uniform();
        const Eigen::Vector2d bw(0.1 + 0.1 * rng.uniform(), 0.1 + 0.1 * rng.uniform());
        const Eigen::Vector2d query(rng.uniform(), rng.uniform());
        const Eigen::MatrixXd analytic = KdeModel(supports, bw).grad_supports(query);
        const double h = 1e-5;
        for (Eigen::Index k = 0; k < supports.size(); ++k) {
            Eigen::MatrixXd plus = supports, minus = supports;
            plus.data()[k] += h;
            minus.data()[k] -= h;
            const double fd =
                (KdeModel(plus, bw).log_eval(query) - KdeModel(minus, bw).log_eval(query)) / (2 * h);
            const double a = analytic.data()[k];
            if (std::abs(fd - a) > 1e-5 * std::max(std::abs(a), 1e-3)) return "support gradient mismatch";
        }
    }
    return {};
}

std::string check_mlp_gradients() {
    Rng rng(3);
    Mlp net({3, 16, 16, 2});
    net.initialize(rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
    Eigen::MatrixXd g = Eigen::MatrixXd::Random(2, 5);
    Mlp::Cache cache;
    net.forward(x, cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
    net.backward(cache, g, &grad);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < net.parameter_count(); k += 7) {
        const double saved = net.params()[k];
        net.params()[k] = saved + h;
        const double up = (net.forward(x).array() * g.array()).sum();
        net.params()[k] = saved - h;
        const double down = (net.forward(x).array() * g.array()).sum();
        net.params()[k] = saved;
        const double fd = (up - down) / (2 * h);
        if (std::abs(fd - grad[k]) > 1e-6 * std::max(1.0, std::abs(fd))) return "parameter gradient mismatch";
    }
    return {};
}

std::string check_volume() {
    // Uniform-ish proposal over [-1,1]; the indicator of the feasible set
    // integrates to 0.4.
    Rng rng(5);
    double sum = 0.0;
    const int runs = 50;
    for (int r = 0; r < runs; ++r) {
        Eigen::MatrixXd supports(1, 256);
        for (int i = 0; i < 256; ++i) supports(0, i) = rng.uniform(-1.0, 1.0);
        const KdeModel proposal(supports, Eigen::VectorXd::Constant(1, 0.075));
        const Eigen::MatrixXd points = proposal.sample(8, rng);
        Eigen::VectorXd score(points.cols());
        for (Eigen::Index j = 0; j < points.cols(); ++j) score[j] = Bimodal1dEnv::feasible(0.0, points(0, j));
        sum += estimate_volume(score, proposal.eval_batch(points)).value;
    }
    const double mean = sum / runs;
    if (std::abs(mean - Bimodal1dEnv::kFeasibleLength) > 0.01 * Bimodal1dEnv::kFeasibleLength)
        return "mean volume " + std::to_string(mean);
    return {};
}

std::string check_replay() {
    Rng rng(9);
    const Bimodal1dEnv env;
    BalancedMemory memory(1000, 1000);
    prefill(memory, env, 500, rng);
    for (int draw = 0; draw < 1000; ++draw) {
        const auto batch = memory.sample_balanced(32, rng);
        int positives = 0;
        for (const auto& e : batch) positives += e.outcome;
        if (batch.size() != 32 || positives != 16) return "unbalanced batch";
    }
    return {};
}

std::string check_modes() {
    const GraspEnv grasp;
    const std::pair<ShapeKind, int> expected[] = {{ShapeKind::H, 5}, {ShapeKind::T, 3}};
    for (const auto& [shape, modes] : expected) {
        const int count = label_modes(feasible_grid(grasp, GraspEnv::canonical_state(shape))).count;
        if (count != modes)
            return std::string(to_string(shape)) + " has " + std::to_string(count) + " modes";
    }
    const Bimodal1dEnv bimodal;
    if (label_modes(feasible_grid(bimodal, Bimodal1dEnv::make_state(0.0))).count != 2) return "bimodal1d modes";
    const Rings2dEnv rings;
    if (label_modes(feasible_grid(rings, Rings2dEnv::make_state(0.5, 0.5))).count != 1) return "rings2d modes";
    return {};
}

std::string check_grasp_determinism() {
    const GraspEnv env;
    Rng rng(13);
    for (int trial = 0; trial < 2000; ++trial) {
        StateDescriptor s = env.generate_state(rng);
        const Eigen::VectorXd a = env.uniform_action(rng);
        const bool first = env.evaluate(s, a);
        if (env.evaluate(s, a) != first) return "non-deterministic outcome";
        s.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        if (env.evaluate(s, a) != first) return "colour changed the outcome";
    }
    return {};
}

}  // namespace

bool run_selftest(std::ostream& out) {
    const std::vector<Suite> suites = {
        {"divergence functions", check_divergences},
        {"kde normalization", check_kde_normalization},
        {"kde support gradients", check_kde_gradients},
        {"mlp parameter gradients", check_mlp_gradients},
        {"volume estimator", check_volume},
        {"replay balance", check_replay},
        {"oracle mode counts", check_modes},
        {"grasp determinism", check_grasp_determinism},
    };
    bool ok = true;
    for (const auto& suite : suites) {
        const auto start = std::chrono::steady_clock::now();
        std::string failure;
        try {
            failure = suite.run();
        } catch (const std::exception& e) {
            failure = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out << (failure.empty() ? "PASS " : "FAIL ") << suite.name << " (" << secs << " s)";
        if (!failure.empty()) out << ": " << failure;
        out << "\n";
        ok = ok && failure.empty();
    }
    return ok;
}
