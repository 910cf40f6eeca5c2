#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fdrl/checkpoint.hpp"
#include "fdrl/config.hpp"
#include "fdrl/errors.hpp"
#include "fdrl/eval.hpp"
#include "fdrl/grid.hpp"
#include "fdrl/trainer.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using namespace fdrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitEnvironment = 3;
constexpr int kExitInternal = 4;

struct TrainArgs {
    std::string config_path;
    std::string divergence;
    std::string env;
    std::string profile = "desk";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> steps;
    std::vector<std::string> overrides;
    std::string out;
    int threads = 1;
    std::int64_t log_every = 1000;
};

struct EvalArgs {
    std::string checkpoint;
    int states = 256;
    int actions = 256;
    double action_opt = 0.0;
    std::vector<std::string> shapes;
    std::vector<int> grid;
    std::uint64_t seed = 12345;
    std::string out;
    int threads = 1;
};

struct OracleArgs {
    std::string env = "grasp2d";
    std::string shape = "H";
    std::vector<int> resolution;
    std::optional<std::uint64_t> state_seed;
    std::string out;
    std::string csv;
};

struct PlotArgs {
    std::string checkpoint;
    std::uint64_t state_seed = 0;
    int samples = 4096;
    std::string shape = "H";
    std::vector<int> resolution;
    std::string out;
};

std::string slurp(const std::function<void(std::ostream&)>& write) {
    std::ostringstream s;
    write(s);
    return s.str();
}

TrainConfig resolve_config(const TrainArgs& args) {
    TrainConfig config = TrainConfig::for_profile(parse_profile(args.profile));
    if (!args.config_path.empty()) config = load_config(args.config_path, config);
    if (!args.divergence.empty()) config.set("divergence", args.divergence);
    if (!args.env.empty()) config.set("env", args.env);
    if (args.seed) config.seed = *args.seed;
    if (args.steps) config.total_steps = *args.steps;
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    config.validate();
    return config;
}

int run_train(const TrainArgs& args) {
    const TrainConfig config = resolve_config(args);
    fs::create_directories(args.out);
    write_file_atomic((fs::path(args.out) / "config.txt").string(), config.to_text());

    Trainer trainer(config);
    trainer.set_threads(args.threads);
    const auto start = std::chrono::steady_clock::now();
    trainer.prefill();
    TrainLog log;
    for (std::int64_t i = 0; i < config.total_steps; ++i) {
        log.records.push_back(trainer.train_step());
        const auto& r = log.records.back();
        if (args.log_every > 0 && r.step % args.log_every == 0) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::cerr << "step " << r.step << " div " << r.divergence << " critic " << r.critic_loss << " pos "
                      << r.positive_rate << " V " << r.volume_mean << " (" << secs << " s)\n";
        }
        if (config.checkpoint_interval > 0 && r.step % config.checkpoint_interval == 0 &&
            r.step != config.total_steps) {
            const auto name = "checkpoint_" + std::to_string(r.step) + ".bin";
            save_checkpoint((fs::path(args.out) / name).string(), trainer.checkpoint());
        }
    }
    save_checkpoint((fs::path(args.out) / "checkpoint.bin").string(), trainer.checkpoint());
    write_file_atomic((fs::path(args.out) / "train_log.csv").string(),
                      slurp([&](std::ostream& o) { log.write_csv(o); }));
    return kExitOk;
}

std::optional<std::array<int, 3>> grid_cells(const std::vector<int>& values) {
    if (values.empty()) return std::nullopt;
    if (values.size() != 3) throw ConfigError("resolution expects three comma-separated integers");
    for (int v : values)
        if (v < 1) throw ConfigError("resolution entries must be positive");
    return std::array<int, 3>{values[0], values[1], values[2]};
}

Checkpoint load_checkpoint_or_usage(const std::string& path) {
    try {
        return load_checkpoint(path);
    } catch (const FormatError& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
}

int run_eval(const EvalArgs& args) {
    const Checkpoint ckpt = load_checkpoint_or_usage(args.checkpoint);
    LoadedModel model;
    try {
        model = load_model(ckpt);
    } catch (const FormatError& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
    EvalOptions options;
    options.states = args.states;
    options.actions = args.actions;
    options.action_opt = args.action_opt;
    options.bandwidth = model.config.bandwidth();
    options.grid_cells = grid_cells(args.grid);
    options.threads = args.threads;
    for (const auto& s : args.shapes) options.shapes.push_back(parse_shape(s));
    options.validate(*model.env);

    Rng rng(args.seed);
    const ModeRankReport report = mode_rank_shares(actor_sampler(model.actor), *model.env, options, rng);
    report.validate();
    fs::create_directories(args.out);
    write_file_atomic((fs::path(args.out) / "mode_ranks.csv").string(),
                      slurp([&](std::ostream& o) { report.write_csv(o); }));
    const std::string summary = slurp([&](std::ostream& o) { report.write_summary(o); });
    write_file_atomic((fs::path(args.out) / "summary.txt").string(), summary);
    std::cout << summary;
    return kExitOk;
}

StateDescriptor oracle_state(const Environment& env, ShapeKind shape, std::optional<std::uint64_t> seed) {
    if (env.kind() == EnvKind::Grasp2d) {
        const auto& grasp = static_cast<const GraspEnv&>(env);
        if (!seed) return GraspEnv::canonical_state(shape);
        Rng rng(*seed);
        return grasp.generate_state(shape, rng);
    }
    if (!seed) {
        return env.kind() == EnvKind::Bimodal1d ? Bimodal1dEnv::make_state(0.0) : Rings2dEnv::make_state(0.5, 0.5);
    }
    Rng rng(*seed);
    return env.generate_state(rng);
}

int run_oracle(const OracleArgs& args) {
    const auto env = make_environment(parse_env(args.env), {});
    const StateDescriptor state = oracle_state(*env, parse_shape(args.shape), args.state_seed);
    const auto cells = grid_cells(args.resolution);
    const GridSpec spec = cells ? env->grid_with_cells(*cells) : env->default_grid();
    const FeasibilityGrid grid = feasible_grid(*env, state, spec);
    const ModeLabels labels = label_modes(grid);
    write_file_atomic(args.out, slurp([&](std::ostream& o) { write_grid(o, grid, labels.count); }));
    if (!args.csv.empty())
        write_file_atomic(args.csv, slurp([&](std::ostream& o) { write_grid_csv(o, grid, labels); }));
    std::cout << "cells " << spec.cells[0] << 'x' << spec.cells[1] << 'x' << spec.cells[2] << ", feasible "
              << grid.feasible_count() << " (" << 100.0 * grid.feasible_fraction() << "%), modes " << labels.count
              << "\n";
    return kExitOk;
}

int run_plotgrid(const PlotArgs& args) {
    const Checkpoint ckpt = load_checkpoint_or_usage(args.checkpoint);
    LoadedModel model;
    try {
        model = load_model(ckpt);
    } catch (const FormatError& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
    if (args.samples < 1) throw ConfigError("samples must be >= 1");
    const Environment& env = *model.env;
    const StateDescriptor state = oracle_state(env, parse_shape(args.shape), args.state_seed);
    const auto cells = grid_cells(args.resolution);
    const GridSpec spec = cells ? env.grid_with_cells(*cells) : env.default_grid();
    const FeasibilityGrid truth = feasible_grid(env, state, spec);
    const auto truth_xy = project_xy(truth);

    Rng rng(args.state_seed);
    const Eigen::MatrixXd actions = model.actor.forward(state.features(), model.actor.sample_latents(args.samples, rng));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(spec.cells[0]) * spec.cells[1], 0);
    for (Eigen::Index j = 0; j < actions.cols(); ++j) {
        const auto c = env.grid_coords(actions.col(j));
        std::array<int, 2> idx{};
        for (int axis = 0; axis < 2; ++axis) {
            const double u = (c[axis] - spec.lower[axis]) / (spec.upper[axis] - spec.lower[axis]) * spec.cells[axis];
            idx[axis] = std::clamp(static_cast<int>(std::floor(u)), 0, spec.cells[axis] - 1);
        }
        ++counts[static_cast<std::size_t>(idx[0]) * spec.cells[1] + idx[1]];
    }
    const std::string body = slurp([&](std::ostream& o) {
        o << "ix,iy,x,y,count,feasible\n";
        for (int ix = 0; ix < spec.cells[0]; ++ix)
            for (int iy = 0; iy < spec.cells[1]; ++iy) {
                const auto k = static_cast<std::size_t>(ix) * spec.cells[1] + iy;
                o << ix << ',' << iy << ',' << spec.center(0, ix) << ',' << spec.center(1, iy) << ',' << counts[k]
                  << ',' << static_cast<int>(truth_xy[k]) << '\n';
            }
    });
    write_file_atomic(args.out, body);
    std::size_t occupied = 0;
    for (auto c : counts) occupied += c > 0;
    std::cout << "samples " << args.samples << ", occupied cells " << occupied << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal generative actors trained with f-divergences"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train an actor/critic pair");
    train_cmd->add_option("--config", train.config_path, "key=value config file")->check(CLI::ExistingFile);
    train_cmd->add_option("--divergence", train.divergence, "js|fkl|rkl|gan|me");
    train_cmd->add_option("--env", train.env, "grasp2d|bimodal1d|rings2d");
    train_cmd->add_option("--profile", train.profile, "desk|paper")->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "Master seed");
    train_cmd->add_option("--steps", train.steps, "Outer training steps (total_steps)");
    train_cmd->add_option("--set", train.overrides, "Config override key=value (repeatable)");
    train_cmd->add_option("--out", train.out, "Output directory")->required();
    train_cmd->add_option("--threads", train.threads, "Worker threads")->check(CLI::PositiveNumber);
    train_cmd->add_option("--log-every", train.log_every, "Progress line interval (0 = silent)");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Accuracy and mode-rank report for a checkpoint");
    eval_cmd->add_option("--checkpoint", eval.checkpoint)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--states", eval.states, "States (per shape for grasp2d)")->capture_default_str();
    eval_cmd->add_option("--actions", eval.actions, "Actions per state")->capture_default_str();
    eval_cmd->add_option("--action-opt", eval.action_opt, "Fraction of lowest-density actions rejected");
    eval_cmd->add_option("--shape", eval.shapes, "Restrict grasp2d evaluation to these shapes");
    eval_cmd->add_option("--resolution", eval.grid, "Oracle grid cells Gx,Gy,Ga")->delimiter(',');
    eval_cmd->add_option("--seed", eval.seed, "Evaluation seed")->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "Output directory")->required();
    eval_cmd->add_option("--threads", eval.threads)->check(CLI::PositiveNumber);

    OracleArgs oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "Dump the feasibility grid and its modes");
    oracle_cmd->add_option("--env", oracle.env)->capture_default_str();
    oracle_cmd->add_option("--shape", oracle.shape)->capture_default_str();
    oracle_cmd->add_option("--resolution", oracle.resolution, "Gx,Gy,Ga")->delimiter(',');
    oracle_cmd->add_option("--state-seed", oracle.state_seed, "Random state instead of the canonical one");
    oracle_cmd->add_option("--out", oracle.out, "Grid file")->required();
    oracle_cmd->add_option("--csv", oracle.csv, "Optional CSV of feasible cells with mode ids");

    PlotArgs plot;
    auto* plot_cmd = app.add_subcommand("plotgrid", "Heat-grid of actor samples projected onto x-y");
    plot_cmd->add_option("--checkpoint", plot.checkpoint)->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--state-seed", plot.state_seed)->capture_default_str();
    plot_cmd->add_option("--shape", plot.shape)->capture_default_str();
    plot_cmd->add_option("--samples", plot.samples)->capture_default_str();
    plot_cmd->add_option("--resolution", plot.resolution, "Gx,Gy,Ga")->delimiter(',');
    plot_cmd->add_option("--out", plot.out)->required();

    auto* selftest_cmd = app.add_subcommand("selftest", "Run the oracle and finite-difference property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) return run_train(train);
        if (*eval_cmd) return run_eval(eval);
        if (*oracle_cmd) return run_oracle(oracle);
        if (*plot_cmd) return run_plotgrid(plot);
        if (*selftest_cmd) return run_selftest(std::cout) ? kExitOk : kExitInternal;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const EnvironmentTooSparseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
