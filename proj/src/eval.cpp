#include "fdrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "fdrl/errors.hpp"
#include "fdrl/grid.hpp"
#include "fdrl/kde.hpp"
#include "fdrl/parallel.hpp"

namespace fdrl {

ActionSampler actor_sampler(const Actor& actor) {
    return [&actor](const StateDescriptor& state, int count, Rng& rng) {
        return actor.forward(state.features(), actor.sample_latents(count, rng));
    };
}

ActionSampler uniform_sampler(const Environment& env) {
    return [&env](const StateDescriptor&, int count, Rng& rng) {
        Eigen::MatrixXd out(env.action_dim(), count);
        for (int i = 0; i < count; ++i) out.col(i) = env.uniform_action(rng);
        return out;
    };
}

std::vector<int> action_optimization_keep(const Eigen::MatrixXd& actions, const Eigen::VectorXd& bandwidth,
                                          double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ContractError("action optimization fraction must be in [0,1)");
    const int count = static_cast<int>(actions.cols());
    const int drop = static_cast<int>(std::floor(fraction * count));
    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    if (drop == 0) return order;
    const Eigen::VectorXd density = KdeModel(actions, bandwidth).eval_batch(actions);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return density[a] < density[b]; });
    std::vector<int> kept(order.begin() + drop, order.end());
    std::sort(kept.begin(), kept.end());
    return kept;
}

Eigen::MatrixXd action_optimization(const Eigen::MatrixXd& actions, const Eigen::VectorXd& bandwidth,
                                    double fraction) {
    const auto kept = action_optimization_keep(actions, bandwidth, fraction);
    Eigen::MatrixXd out(actions.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = actions.col(kept[i]);
    return out;
}

void EvalOptions::validate(const Environment& env) const {
    if (states < 1) throw ConfigError("states must be >= 1");
    if (actions < 1) throw ConfigError("actions must be >= 1");
    if (!(action_opt >= 0.0 && action_opt < 1.0)) throw ConfigError("action-opt must be in [0,1)");
    if (action_opt > 0.0 && bandwidth.size() != env.action_dim())
        throw ConfigError("action optimization needs a bandwidth per action dimension");
    if (static_cast<int>(std::floor(action_opt * actions)) >= actions)
        throw ConfigError("action optimization would reject every action");
}

namespace {

struct StateGroup {
    std::string name;
    std::vector<StateDescriptor> states;
};

std::vector<StateGroup> draw_states(const Environment& env, const EvalOptions& options, Rng& rng) {
    std::vector<StateGroup> groups;
    if (env.kind() == EnvKind::Grasp2d) {
        const auto& grasp = static_cast<const GraspEnv&>(env);
        std::vector<ShapeKind> shapes = options.shapes;
        if (shapes.empty()) shapes.assign(kAllShapes.begin(), kAllShapes.end());
        for (ShapeKind shape : shapes) {
            StateGroup g{std::string(to_string(shape)), {}};
            for (int i = 0; i < options.states; ++i) g.states.push_back(grasp.generate_state(shape, rng));
            groups.push_back(std::move(g));
        }
    } else {
        StateGroup g{std::string(to_string(env.kind())), {}};
        for (int i = 0; i < options.states; ++i) g.states.push_back(env.generate_state(rng));
        groups.push_back(std::move(g));
    }
    return groups;
}

Eigen::MatrixXd sample_actions(const ActionSampler& sampler, const StateDescriptor& state,
                               const EvalOptions& options, Rng& rng) {
    const Eigen::MatrixXd raw = sampler(state, options.actions, rng);
    if (options.action_opt <= 0.0) return raw;
    return action_optimization(raw, options.bandwidth, options.action_opt);
}

std::vector<Rng> substreams(Rng& rng, std::size_t count) {
    std::vector<Rng> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(rng.split());
    return out;
}

}  // namespace

double accuracy(const ActionSampler& sampler, const Environment& env, const EvalOptions& options, Rng& rng) {
    options.validate(env);
    std::vector<StateDescriptor> states;
    for (auto& g : draw_states(env, options, rng))
        states.insert(states.end(), g.states.begin(), g.states.end());
    auto streams = substreams(rng, states.size());
    std::vector<std::int64_t> hits(states.size()), totals(states.size());
    parallel_for(static_cast<int>(states.size()), options.threads, [&](int i) {
        const Eigen::MatrixXd actions = sample_actions(sampler, states[i], options, streams[i]);
        for (Eigen::Index j = 0; j < actions.cols(); ++j) hits[i] += env.evaluate(states[i], actions.col(j));
        totals[i] = actions.cols();
    });
    const double h = static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::int64_t{0}));
    const double t = static_cast<double>(std::accumulate(totals.begin(), totals.end(), std::int64_t{0}));
    return h / t;
}

ModeRankReport mode_rank_shares(const ActionSampler& sampler, const Environment& env, const EvalOptions& options,
                                Rng& rng) {
    options.validate(env);
    const GridSpec spec = options.grid_cells ? env.grid_with_cells(*options.grid_cells) : env.default_grid();
    ModeRankReport report;
    report.states = options.states;
    report.actions = options.actions - static_cast<int>(std::floor(options.action_opt * options.actions));
    report.action_opt = options.action_opt;

    for (const auto& group : draw_states(env, options, rng)) {
        const std::size_t n = group.states.size();
        auto streams = substreams(rng, n);
        std::vector<std::vector<double>> sorted_shares(n);
        std::vector<double> failures(n);
        std::vector<int> mode_counts(n);
        parallel_for(static_cast<int>(n), options.threads, [&](int i) {
            const auto& state = group.states[i];
            const FeasibilityGrid grid = feasible_grid(env, state, spec);
            const ModeLabels labels = label_modes(grid);
            const Eigen::MatrixXd actions = sample_actions(sampler, state, options, streams[i]);
            std::vector<std::int64_t> counts(static_cast<std::size_t>(labels.count), 0);
            std::int64_t failed = 0;
            for (Eigen::Index j = 0; j < actions.cols(); ++j) {
                const auto mode = mode_of(env, state, actions.col(j), grid, labels);
                if (mode && *mode != kNoMode)
                    ++counts[static_cast<std::size_t>(*mode)];
                else
                    ++failed;
            }
            const double total = static_cast<double>(actions.cols());
            std::vector<double> shares(counts.size());
            for (std::size_t k = 0; k < counts.size(); ++k) shares[k] = static_cast<double>(counts[k]) / total;
            std::sort(shares.begin(), shares.end(), std::greater<>());
            sorted_shares[i] = std::move(shares);
            failures[i] = static_cast<double>(failed) / total;
            mode_counts[i] = labels.count;
        });

        ShapeReport shape;
        shape.name = group.name;
        const int ranks = std::max(1, *std::max_element(mode_counts.begin(), mode_counts.end()));
        shape.rank_share.assign(static_cast<std::size_t>(ranks), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < sorted_shares[i].size(); ++r) shape.rank_share[r] += sorted_shares[i][r];
            shape.failure_share += failures[i];
            shape.mean_mode_count += mode_counts[i];
        }
        for (double& s : shape.rank_share) s /= static_cast<double>(n);
        shape.failure_share /= static_cast<double>(n);
        shape.mean_mode_count /= static_cast<double>(n);
        shape.accuracy = 1.0 - shape.failure_share;
        report.shapes.push_back(std::move(shape));
    }
    report.validate();
    return report;
}

void ModeRankReport::validate() const {
    for (const auto& s : shapes) {
        const double sum = std::accumulate(s.rank_share.begin(), s.rank_share.end(), s.failure_share);
        if (std::abs(sum - 1.0) > 1e-9) throw ContractError("mode shares for " + s.name + " do not sum to one");
    }
}

void ModeRankReport::write_csv(std::ostream& out) const {
    out << "shape,rank,share,failure,accuracy\n";
    out << std::setprecision(10);
    for (const auto& s : shapes)
        for (std::size_t r = 0; r < s.rank_share.size(); ++r)
            out << s.name << ',' << r + 1 << ',' << s.rank_share[r] << ',' << s.failure_share << ',' << s.accuracy
                << '\n';
}

void ModeRankReport::write_summary(std::ostream& out) const {
    std::size_t ranks = 0;
    for (const auto& s : shapes) ranks = std::max(ranks, s.rank_share.size());
    out << "states/shape " << states << ", actions/state " << actions << ", action-opt " << action_opt << "\n";
    out << std::left << std::setw(10) << "shape" << std::right << std::setw(10) << "success%";
    for (std::size_t r = 0; r < ranks; ++r) out << std::setw(9) << ("rank" + std::to_string(r + 1));
    out << std::setw(9) << "fail" << std::setw(9) << "modes" << "\n";
    out << std::fixed << std::setprecision(1);
    for (const auto& s : shapes) {
        out << std::left << std::setw(10) << s.name << std::right << std::setw(10) << 100.0 * s.accuracy;
        for (std::size_t r = 0; r < ranks; ++r) {
            if (r < s.rank_share.size())
                out << std::setw(9) << 100.0 * s.rank_share[r];
            else
                out << std::setw(9) << "-";
        }
        out << std::setw(9) << 100.0 * s.failure_share << std::setw(9) << s.mean_mode_count << "\n";
    }
    out.unsetf(std::ios::fixed);
}

}  // namespace fdrl
