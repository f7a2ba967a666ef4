// anodet: detect anomalous processes by sequentially choosing which one to
// observe. Subcommands cover data generation, model inspection, training,
// evaluation, threshold/correlation sweeps, and per-decision latency.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "anodet/anodet.hpp"

namespace {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

anodet::ExperimentConfig load_and_validate(const std::string& path,
                                           std::optional<std::uint64_t> seed_override) {
    anodet::ExperimentConfig cfg = anodet::load_config(path);
    if (seed_override) cfg.seed = *seed_override;
    const anodet::ValidationReport report = anodet::validate_config(cfg);
    if (!report.ok()) throw ValidationError("invalid config:\n" + report.to_string());
    return cfg;
}

anodet::Algorithm parse_algorithm_or_throw(const std::string& name) {
    anodet::Algorithm alg;
    if (!anodet::parse_algorithm(name, alg))
        throw ValidationError("unknown algorithm '" + name + "' (expected proposed, joint, naive, or random)");
    return alg;
}

std::filesystem::path ensure_out_dir(const std::string& out) {
    std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_learning_curve(const std::vector<anodet::EpisodeSummary>& curve,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "episode,reward_sum,stopping_time,correct\n";
    for (const auto& e : curve)
        out << e.episode << ',' << anodet::format_double(e.reward_sum) << ','
            << e.stopping_time << ',' << (e.correct ? 1 : 0) << '\n';
}

void write_episode_summaries(const std::vector<anodet::EpisodeTrace>& traces,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "episode,stopping_time,truncated,correct,reward_sum\n";
    for (std::size_t i = 0; i < traces.size(); ++i)
        out << i + 1 << ',' << traces[i].stopping_time << ',' << (traces[i].truncated ? 1 : 0)
            << ',' << (traces[i].correct ? 1 : 0) << ','
            << anodet::format_double(anodet::trace_reward_sum(traces[i])) << '\n';
}

int run(int argc, char** argv) {
    CLI::App app{"anomaly detection via learned sequential process selection"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string algorithm = "proposed";
    std::optional<int> episodes;
    int threads = 1;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config JSON");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed, "master seed override");
        cmd->add_option("--out", out_dir, "output directory");
    };

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "sample training data from the prior");
    add_common(gen);
    int gen_count = 0;
    gen->add_option("--count", gen_count, "number of samples (default: training.samples)");
    gen->callback([&] {
        auto cfg = load_and_validate(config_path, seed);
        const int count = gen_count > 0 ? gen_count : cfg.training.samples;
        if (count < 1) throw ValidationError("--count must be >= 1");
        anodet::RandomStream rng(cfg.seed, 0);
        const auto data = anodet::generate_training_data(cfg.prior, count, rng);
        const auto path = ensure_out_dir(out_dir) / "train_data.txt";
        anodet::save_dataset(data, path.string());
        std::cout << "wrote " << data.samples.size() << " samples to " << path.string() << "\n";
    });

    // inspect
    auto* inspect = app.add_subcommand("inspect", "print the estimated dependency model");
    add_common(inspect);
    std::string data_path;
    inspect->add_option("--data", data_path, "dataset file (default: generate from the prior)");
    inspect->callback([&] {
        auto cfg = load_and_validate(config_path, seed);
        anodet::TrainingDataset data;
        if (!data_path.empty()) {
            data = anodet::load_dataset(data_path);
            if (data.n_processes != cfg.prior.n_processes)
                throw ValidationError("dataset width does not match n_processes");
        } else {
            anodet::RandomStream rng(cfg.seed, 0);
            data = anodet::generate_training_data(cfg.prior, cfg.training.samples, rng);
        }
        const auto model = anodet::estimate_dependency_model(data);
        const auto prior = anodet::estimate_prior_beliefs(data);

        std::printf("estimated from %zu samples\n", data.samples.size());
        std::printf("prior P[normal]:");
        for (double p : prior) std::printf(" %.4f", p);
        std::printf("\n\npairwise conditionals P[s_j = s' | s_i = s]\n");
        std::printf("%3s %3s  %12s %12s %12s %12s\n", "i", "j", "P[0|0]", "P[1|0]", "P[0|1]",
                    "P[1|1]");
        for (int i = 0; i < model.size(); ++i)
            for (int j = 0; j < model.size(); ++j) {
                if (i == j) continue;
                std::printf("%3d %3d  %12.6f %12.6f %12.6f %12.6f\n", i + 1, j + 1,
                            model.at(i, j, 0, 0), model.at(i, j, 0, 1), model.at(i, j, 1, 0),
                            model.at(i, j, 1, 1));
            }
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "train an actor-critic policy");
    add_common(train_cmd);
    train_cmd->add_option("--algorithm", algorithm, "proposed | joint | naive");
    train_cmd->add_option("--episodes", episodes, "training episodes override");
    train_cmd->callback([&] {
        auto cfg = load_and_validate(config_path, seed);
        const auto alg = parse_algorithm_or_throw(algorithm);
        if (alg == anodet::Algorithm::random)
            throw ValidationError("the random policy has nothing to train");
        if (episodes) {
            if (*episodes < 1) throw ValidationError("--episodes must be >= 1");
            cfg.training.episodes = *episodes;
        }
        anodet::RandomStream data_rng(cfg.seed, 0);
        const auto models =
            anodet::build_models(cfg, data_rng, alg == anodet::Algorithm::joint);
        const auto result =
            anodet::train(alg, cfg, models, anodet::derive_stream_seed(cfg.seed, 1));

        const auto dir = ensure_out_dir(out_dir);
        anodet::Checkpoint ckpt{algorithm, anodet::config_hash(cfg), result.nets.actor,
                                result.nets.critic, result.nets.actor_opt,
                                result.nets.critic_opt};
        anodet::save_checkpoint(ckpt, (dir / "checkpoint.json").string());
        write_learning_curve(result.curve, dir / "learning_curve.csv");

        double tail_k = 0.0;
        const std::size_t tail =
            std::min<std::size_t>(500, result.curve.empty() ? 0 : result.curve.size());
        for (std::size_t i = result.curve.size() - tail; i < result.curve.size(); ++i)
            tail_k += result.curve[i].stopping_time;
        std::cout << "trained " << result.curve.size() << " episodes ("
                  << algorithm << "); trailing-" << tail << " mean stopping time "
                  << (tail ? tail_k / static_cast<double>(tail) : 0.0) << "\n"
                  << "checkpoint: " << (dir / "checkpoint.json").string() << "\n";
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a frozen checkpoint");
    add_common(eval_cmd);
    std::string checkpoint_path;
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval_cmd->add_option("--episodes", episodes, "evaluation episodes");
    eval_cmd->add_option("--threads", threads, "evaluation worker threads");
    eval_cmd->callback([&] {
        auto cfg = load_and_validate(config_path, seed);
        const auto ckpt = anodet::load_checkpoint(checkpoint_path);
        if (ckpt.config_hash != anodet::config_hash(cfg))
            std::cerr << "warning: checkpoint was trained under a different config\n";
        const auto alg = parse_algorithm_or_throw(ckpt.algorithm);
        const int n_eval = episodes.value_or(cfg.sweep.episodes_per_cell);
        if (n_eval < 1) throw ValidationError("--episodes must be >= 1");

        anodet::RandomStream data_rng(cfg.seed, 0);
        const auto models =
            anodet::build_models(cfg, data_rng, alg == anodet::Algorithm::joint);
        anodet::AgentNetworks nets{ckpt.actor, ckpt.critic, ckpt.actor_opt, ckpt.critic_opt};
        const auto traces = anodet::evaluate(alg, &nets, models, cfg, n_eval,
                                             anodet::derive_stream_seed(cfg.seed, 2), threads);

        const auto dir = ensure_out_dir(out_dir);
        write_episode_summaries(traces, dir / "episodes.csv");
        const auto cell = anodet::aggregate_cell(alg, cfg.prior.correlation,
                                                 cfg.agent.confidence_threshold, traces);
        std::cout << "episodes " << n_eval << "  accuracy " << cell.accuracy
                  << "  mean stopping time " << cell.mean_stopping_time << " (stderr "
                  << cell.stopping_time_stderr << ")  truncation rate " << cell.truncation_rate
                  << "\n"
                  << "per-episode summaries: " << (dir / "episodes.csv").string() << "\n";
    });

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "run the threshold/correlation sweep");
    add_common(sweep_cmd);
    std::string sweep_algorithm;
    sweep_cmd->add_option("--algorithm", sweep_algorithm, "restrict to one algorithm");
    sweep_cmd->add_option("--episodes", episodes, "evaluation episodes per cell");
    sweep_cmd->add_option("--threads", threads, "evaluation worker threads");
    sweep_cmd->callback([&] {
        auto cfg = load_and_validate(config_path, seed);
        if (!sweep_algorithm.empty())
            cfg.sweep.algorithms = {parse_algorithm_or_throw(sweep_algorithm)};
        if (episodes) {
            if (*episodes < 1) throw ValidationError("--episodes must be >= 1");
            cfg.sweep.episodes_per_cell = *episodes;
        }
        const auto outcome = anodet::run_sweep(cfg, threads);
        for (const auto& f : outcome.failures) std::cerr << "cell failed: " << f << "\n";
        if (outcome.cells.empty()) throw std::runtime_error("sweep produced no results");
        const auto files = anodet::emit_results(outcome, cfg, out_dir);
        std::cout << "wrote " << files.results_csv << "\n"
                  << "wrote " << files.plot_csv << "\n"
                  << "wrote " << files.manifest_json << "\n";
    });

    // latency
    auto* lat_cmd = app.add_subcommand("latency", "measure per-decision latency");
    add_common(lat_cmd);
    lat_cmd->add_option("--algorithm", algorithm, "proposed | joint | naive | random");
    int decisions = 2000;
    lat_cmd->add_option("--decisions", decisions, "timed decisions");
    lat_cmd->callback([&] {
        auto cfg = load_and_validate(config_path, seed);
        const auto alg = parse_algorithm_or_throw(algorithm);
        if (decisions < 1) throw ValidationError("--decisions must be >= 1");
        const auto stats = anodet::measure_decision_latency(alg, cfg, decisions, cfg.seed);
        std::printf("%s: N=%d  mean %.4f ms/decision  median %.4f ms/decision (%d decisions)\n",
                    algorithm.c_str(), cfg.prior.n_processes, stats.mean_seconds * 1e3,
                    stats.median_seconds * 1e3, stats.decisions);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
