#include <gtest/gtest.h>

#include <sstream>

#include "fdrl/errors.hpp"
#include "fdrl/trainer.hpp"

using namespace fdrl;

namespace {

TrainConfig small_config(DivergenceKind kind = DivergenceKind::JS, EnvKind env = EnvKind::Bimodal1d) {
    TrainConfig c;
    c.divergence = kind;
    c.env = env;
    c.seed = 11;
    c.N = 16;
    c.m = 2;
    c.M = 32;
    c.U = 4;
    c.K = 3;
    c.L = 8;
    c.hidden_width = 16;
    c.hidden_layers = 2;
    c.prefill = 300;
    c.total_steps = 6;
    c.capacity_positive = 500;
    c.capacity_negative = 500;
    return c;
}

std::string log_text(const TrainLog& log) {
    std::ostringstream out;
    log.write_csv(out);
    return out.str();
}

std::string checkpoint_bytes(const Checkpoint& c) {
    std::ostringstream out(std::ios::binary);
    write_checkpoint(out, c);
    return out.str();
}

double mean_pairwise_distance(const Eigen::MatrixXd& a) {
    double total = 0.0;
    int pairs = 0;
    for (Eigen::Index i = 0; i < a.cols(); ++i)
        for (Eigen::Index j = i + 1; j < a.cols(); ++j, ++pairs) total += (a.col(i) - a.col(j)).norm();
    return total / pairs;
}

}  // namespace

TEST(Trainer, UncertaintyTieBreak) {
    EXPECT_EQ(Trainer::most_uncertain(Eigen::VectorXd::Constant(5, 0.5)), 0);
    EXPECT_EQ(Trainer::most_uncertain(Eigen::Vector3d(0.1, 0.49, 0.9)), 1);
    EXPECT_EQ(Trainer::most_uncertain(Eigen::VectorXd::Constant(1, 0.99)), 0);
    EXPECT_EQ(Trainer::most_uncertain(Eigen::Vector3d(0.25, 0.75, 0.25)), 0);
    EXPECT_THROW(Trainer::most_uncertain(Eigen::VectorXd()), ContractError);
}

TEST(Trainer, SingleProposalIsTaken) {
    TrainConfig c = small_config();
    c.U = 1;
    Trainer t(c);
    const Experience e = t.collect_step();
    EXPECT_EQ(t.interaction_count(), 1);
    EXPECT_EQ(t.memory().size(), 1u);
    EXPECT_EQ(e.action.size(), 1);
}

TEST(Trainer, PhaseRatioAndCriticCalls) {
    Trainer t(small_config());
    const TrainLog log = t.train();
    EXPECT_EQ(log.records.size(), 6u);
    EXPECT_EQ(t.interaction_count(), 6);
    EXPECT_EQ(t.critic_step_count(), 12);
    EXPECT_LE(t.actor_step_count(), 6);
    const ActorStepResult r = t.actor_step_fdiv();
    EXPECT_EQ(r.critic_calls, 3 * 32);
    EXPECT_EQ(r.evaluated + r.degenerate, 3);
    EXPECT_TRUE(std::isfinite(r.grad_norm));
}

TEST(Trainer, RunsAreReproducibleAcrossThreadCounts) {
    Trainer a(small_config()), b(small_config()), c(small_config());
    c.set_threads(3);
    const std::string la = log_text(a.train()), lb = log_text(b.train()), lc = log_text(c.train());
    EXPECT_EQ(la, lb);
    EXPECT_EQ(la, lc);
    EXPECT_EQ(checkpoint_bytes(a.checkpoint()), checkpoint_bytes(b.checkpoint()));
    EXPECT_EQ(checkpoint_bytes(a.checkpoint()), checkpoint_bytes(c.checkpoint()));
    TrainConfig other = small_config();
    other.seed = 12;
    Trainer d(other);
    EXPECT_NE(log_text(d.train()), la);
}

TEST(Trainer, LogHasOneRowPerStep) {
    Trainer t(small_config());
    const std::string text = log_text(t.train());
    EXPECT_EQ(text.substr(0, text.find('\n')), TrainLog::header());
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

TEST(Trainer, RestoreReproducesState) {
    Trainer a(small_config());
    a.train();
    const Checkpoint ck = a.checkpoint();
    Trainer b(small_config());
    b.restore(ck);
    EXPECT_EQ(b.actor().params(), a.actor().params());
    EXPECT_EQ(b.critic().params(), a.critic().params());
    EXPECT_EQ(b.step(), 6);
    EXPECT_EQ(checkpoint_bytes(b.checkpoint()), checkpoint_bytes(ck));

    const LoadedModel model = load_model(ck);
    EXPECT_EQ(model.actor.params(), a.actor().params());
    EXPECT_EQ(model.config.hash(), ck.config_hash);

    TrainConfig wider = small_config();
    wider.hidden_width = 8;
    Trainer w(wider);
    EXPECT_THROW(w.restore(ck), FormatError);
    Checkpoint tampered = ck;
    tampered.config_hash ^= 1;
    EXPECT_THROW(load_model(tampered), FormatError);
}

TEST(Trainer, CriticOverfitsFrozenMemory) {
    TrainConfig c = small_config();
    c.lr_critic = 3e-3;
    c.L = 32;
    c.hidden_width = 64;
    c.hidden_layers = 3;
    Trainer t(c);
    Rng rng(5);
    const Bimodal1dEnv env;
    while (t.memory().size() < 100) {
        const auto s = env.generate_state(rng);
        t.memory().push(make_experience(env, s, env.uniform_action(rng)));
    }
    ASSERT_TRUE(t.memory().ready());
    double tail = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double loss = t.critic_step();
        ASSERT_GE(loss, 0.0);
        if (i >= 1900) tail += loss / 100.0;
    }
    EXPECT_LT(tail, 0.2);
}

TEST(Trainer, CriticNeedsBothStores) {
    Trainer t(small_config());
    EXPECT_THROW(t.critic_step(), NotReadyError);
    EXPECT_THROW(t.actor_step_gan(), NotReadyError);
}

TEST(Trainer, EntropyOnlyUpdateSpreadsSamples) {
    TrainConfig c = small_config(DivergenceKind::ME);
    c.lr_actor = 1e-3;
    c.N = 32;
    c.M = 64;
    Trainer t(c);
    t.prefill();
    t.critic().params().setZero();
    t.actor().params() *= 0.1;  // start from a narrow cloud
    const StateDescriptor s = Bimodal1dEnv::make_state(0.0);
    Rng rng(6);
    const Eigen::MatrixXd z = t.actor().sample_latents(200, rng);
    const double before = mean_pairwise_distance(t.actor().forward(s.features(), z));
    for (int i = 0; i < 200; ++i) t.actor_step_me();
    const double after = mean_pairwise_distance(t.actor().forward(s.features(), z));
    EXPECT_GT(after, before);
}

TEST(Trainer, ConstantDiscriminatorGivesZeroGeneratorGradient) {
    Trainer t(small_config(DivergenceKind::GAN));
    t.prefill();
    t.critic().params().setZero();
    const ActorStepResult r = t.actor_step_gan();
    EXPECT_EQ(r.grad_norm, 0.0);
    EXPECT_NEAR(r.objective, std::log(0.5), 1e-12);
}

TEST(Trainer, DiscriminatorSeparatesToyData) {
    TrainConfig c = small_config(DivergenceKind::GAN);
    c.lr_critic = 1e-3;
    c.L = 32;
    Trainer t(c);
    t.prefill();
    // Collapse the generator onto a point no positive experience occupies.
    t.actor().params().setZero();
    for (int i = 0; i < 1500; ++i) t.discriminator_step();
    Rng rng(7);
    const auto real = t.memory().sample_positive(200, rng);
    int correct = 0;
    for (const auto& e : real) {
        const Eigen::VectorXd s = e.state.features();
        correct += t.critic().forward(s, e.action) > 0.5;
        const Eigen::MatrixXd fake = t.actor().forward(s, t.actor().sample_latents(1, rng));
        correct += t.critic().forward(s, fake.col(0)) < 0.5;
    }
    EXPECT_GT(correct / 400.0, 0.9);
}

TEST(Trainer, ZeroWeightActorGivesFiniteDeterministicGradient) {
    Trainer t(small_config());
    t.prefill();
    t.actor().params().setZero();
    const auto s = Bimodal1dEnv::make_state(0.1);
    Rng r1(8), r2(8);
    const StateGradient a = t.fdiv_state_gradient(s, r1);
    const StateGradient b = t.fdiv_state_gradient(s, r2);
    EXPECT_TRUE(a.param_grad.allFinite());
    EXPECT_EQ(a.param_grad, b.param_grad);
    EXPECT_EQ(a.batch.resampled_points.cols(), 32);
}

TEST(Trainer, GraspStepRuns) {
    TrainConfig c = small_config(DivergenceKind::FKL, EnvKind::Grasp2d);
    c.shapes = {ShapeKind::H};
    c.prefill = 3000;
    c.total_steps = 2;
    Trainer t(c);
    const TrainLog log = t.train();
    EXPECT_EQ(log.records.size(), 2u);
    for (const auto& r : log.records) EXPECT_TRUE(std::isfinite(r.grad_norm));
}

TEST(Trainer, RejectsInvalidConfig) {
    TrainConfig c = small_config();
    c.M = 31;
    EXPECT_THROW(Trainer{c}, ConfigError);
}
