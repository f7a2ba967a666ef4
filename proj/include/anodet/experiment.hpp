#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anodet/agent.hpp"
#include "anodet/config.hpp"

namespace anodet {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct CellResult {
    std::string algorithm;
    double rho = 0.0;
    double pi_upper = 0.0;
    double accuracy = 0.0;
    double mean_stopping_time = 0.0;
    double stopping_time_stderr = 0.0;
    double truncation_rate = 0.0;
    double latency_s = 0.0;  // filled by the latency command, not by sweeps
};

struct SweepOutcome {
    std::vector<CellResult> cells;
    std::vector<std::string> failures;
};

// Cell seeds depend only on (master seed, algorithm, rho, pi_upper), so any
// cell can be re-run in isolation and reproduce its sweep row.
inline std::uint64_t cell_seed(std::uint64_t master_seed, Algorithm alg, double rho,
                               double pi_upper) {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ (static_cast<std::uint64_t>(alg) + 0x9e37));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(rho));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(pi_upper));
    return h;
}

inline CellResult aggregate_cell(Algorithm alg, double rho, double pi_upper,
                                 const std::vector<EpisodeTrace>& traces) {
    CellResult cell;
    cell.algorithm = algorithm_name(alg);
    cell.rho = rho;
    cell.pi_upper = pi_upper;
    const double total = static_cast<double>(traces.size());
    double correct = 0.0, truncated = 0.0, sum_k = 0.0, sum_k2 = 0.0;
    for (const auto& t : traces) {
        if (t.correct && !t.truncated) correct += 1.0;
        if (t.truncated) truncated += 1.0;
        const double k = static_cast<double>(t.stopping_time);
        sum_k += k;
        sum_k2 += k * k;
    }
    cell.accuracy = correct / total;
    cell.mean_stopping_time = sum_k / total;
    const double var = total > 1.0
                           ? (sum_k2 - sum_k * sum_k / total) / (total - 1.0)
                           : 0.0;
    cell.stopping_time_stderr = std::sqrt((var > 0.0 ? var : 0.0) / total);
    cell.truncation_rate = truncated / total;
    return cell;
}

// Train (when the algorithm learns) and evaluate one sweep cell.
inline CellResult run_cell(const ExperimentConfig& base, Algorithm alg, double rho,
                           double pi_upper, int eval_episodes, int threads = 1) {
    ExperimentConfig cfg = base;
    cfg.prior.correlation = rho;
    cfg.agent.confidence_threshold = pi_upper;

    const std::uint64_t seed = cell_seed(base.seed, alg, rho, pi_upper);
    RandomStream data_rng(seed, 0);
    const BeliefModels models = build_models(cfg, data_rng, alg == Algorithm::joint);

    const AgentNetworks* nets = nullptr;
    TrainResult trained;
    if (alg != Algorithm::random) {
        trained = train(alg, cfg, models, derive_stream_seed(seed, 1));
        nets = &trained.nets;
    }
    const std::vector<EpisodeTrace> traces =
        evaluate(alg, nets, models, cfg, eval_episodes, derive_stream_seed(seed, 2), threads);
    return aggregate_cell(alg, rho, pi_upper, traces);
}

inline SweepOutcome run_sweep(const ExperimentConfig& base, int threads = 1) {
    SweepOutcome outcome;
    for (Algorithm alg : base.sweep.algorithms)
        for (double rho : base.sweep.rho_grid)
            for (double pi_upper : base.sweep.threshold_grid) {
                try {
                    outcome.cells.push_back(run_cell(base, alg, rho, pi_upper,
                                                     base.sweep.episodes_per_cell, threads));
                } catch (const std::exception& e) {
                    std::ostringstream msg;
                    msg << algorithm_name(alg) << " rho=" << rho << " pi_upper=" << pi_upper
                        << ": " << e.what();
                    outcome.failures.push_back(msg.str());
                }
            }
    return outcome;
}

// --- Per-decision latency ----------------------------------------------------

struct LatencyStats {
    double mean_seconds = 0.0;
    double median_seconds = 0.0;
    int decisions = 0;
};

// Times one selection decision: policy forward + sampling, observation, and
// the belief update. Beliefs are reset periodically (untimed) so the loop
// keeps exercising the normal update path instead of a saturated posterior.
inline LatencyStats measure_decision_latency(Algorithm alg, const ExperimentConfig& base,
                                             int n_decisions, std::uint64_t seed = 0x1a7e) {
    if (n_decisions < 1)
        throw std::invalid_argument("measure_decision_latency: n_decisions must be >= 1");

    ExperimentConfig cfg = base;
    cfg.training.model_source = ModelSource::analytic;  // setup cost is not measured
    const int n = cfg.prior.n_processes;
    RandomStream setup_rng(seed, 0);
    const BeliefModels models = build_models(cfg, setup_rng, alg == Algorithm::joint);
    AgentNetworks nets;
    if (alg != Algorithm::random) nets = make_agent(alg, cfg, setup_rng);

    RandomStream rng(seed, 1);
    Episode episode{sample_state(cfg.prior, rng), Channel{cfg.flip_probability}, 1};

    const int warmup = std::min(100, (n_decisions + 9) / 10);
    std::vector<double> seconds;
    seconds.reserve(n_decisions);

    JointBelief joint;
    Belief sigma;
    auto reset_state = [&] {
        if (alg == Algorithm::joint) {
            joint = JointBelief::from_pmf(n, models.joint_prior);
            sigma = marginalize(joint);
        } else {
            sigma = models.prior;
        }
    };
    reset_state();

    using clock = std::chrono::steady_clock;
    for (int d = 0; d < warmup + n_decisions; ++d) {
        if (d % 64 == 0) reset_state();
        const auto t0 = clock::now();
        int action;
        if (alg == Algorithm::random) action = static_cast<int>(rng.uniform_index(n));
        else action = select_action(nets.actor, alg == Algorithm::joint ? joint.p : sigma, rng);
        const Observation obs = observe(episode, action, rng);
        if (alg == Algorithm::joint) {
            joint = update_joint(joint, episode.channel, obs);
            sigma = marginalize(joint);
        } else if (alg == Algorithm::naive) {
            sigma = update_naive(sigma, episode.channel, obs);
        } else {
            sigma = update_marginal(sigma, models.dependency, episode.channel, obs);
        }
        const auto t1 = clock::now();
        if (d >= warmup)
            seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }

    LatencyStats stats;
    stats.decisions = n_decisions;
    double total = 0.0;
    for (double s : seconds) total += s;
    stats.mean_seconds = total / static_cast<double>(seconds.size());
    std::sort(seconds.begin(), seconds.end());
    stats.median_seconds = seconds[seconds.size() / 2];
    return stats;
}

// --- Result files -------------------------------------------------------------

// Shortest round-trip decimal form; parsing the field back recovers the
// exact double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string results_csv_row(const CellResult& c) {
    std::string row = c.algorithm;
    for (double v : {c.rho, c.pi_upper, c.accuracy, c.mean_stopping_time,
                     c.stopping_time_stderr, c.truncation_rate, c.latency_s}) {
        row += ',';
        row += format_double(v);
    }
    return row;
}

inline constexpr const char* kResultsCsvHeader =
    "algorithm,rho,pi_upper,accuracy,mean_stopping_time,stderr,truncation_rate,latency_s";

struct EmittedFiles {
    std::string results_csv;
    std::string manifest_json;
    std::string plot_csv;
};

inline EmittedFiles emit_results(const SweepOutcome& outcome, const ExperimentConfig& cfg,
                                 const std::string& out_dir) {
    if (outcome.cells.empty() && outcome.failures.empty())
        throw std::invalid_argument("emit_results: nothing to write");
    std::filesystem::create_directories(out_dir);
    EmittedFiles files;
    files.results_csv = (std::filesystem::path(out_dir) / "results.csv").string();
    files.manifest_json = (std::filesystem::path(out_dir) / "manifest.json").string();
    files.plot_csv = (std::filesystem::path(out_dir) / "results_long.csv").string();

    {
        std::ofstream out(files.results_csv);
        if (!out) throw std::runtime_error("cannot write " + files.results_csv);
        out << kResultsCsvHeader << '\n';
        for (const auto& c : outcome.cells) out << results_csv_row(c) << '\n';
    }
    {
        std::ofstream out(files.plot_csv);
        if (!out) throw std::runtime_error("cannot write " + files.plot_csv);
        out << "algorithm,rho,pi_upper,metric,value\n";
        for (const auto& c : outcome.cells) {
            const std::pair<const char*, double> metrics[] = {
                {"accuracy", c.accuracy},
                {"mean_stopping_time", c.mean_stopping_time},
                {"stopping_time_stderr", c.stopping_time_stderr},
                {"truncation_rate", c.truncation_rate},
                {"latency_s", c.latency_s}};
            for (const auto& [name, value] : metrics)
                out << c.algorithm << ',' << format_double(c.rho) << ','
                    << format_double(c.pi_upper) << ',' << name << ',' << format_double(value)
                    << '\n';
        }
    }
    {
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        nlohmann::ordered_json manifest;
        manifest["artifact_version"] = kArtifactVersion;
        manifest["config_hash"] = config_hash(cfg);
        manifest["seed"] = cfg.seed;
        manifest["cells"] = outcome.cells.size();
        manifest["failures"] = outcome.failures;
        manifest["created_at"] = stamp;
        std::ofstream out(files.manifest_json);
        if (!out) throw std::runtime_error("cannot write " + files.manifest_json);
        out << manifest.dump(2) << '\n';
    }
    return files;
}

inline std::vector<CellResult> parse_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<CellResult> cells;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 8) throw std::runtime_error("results csv: malformed row");
        auto num = [](const std::string& s) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size())
                throw std::runtime_error("results csv: bad number '" + s + "'");
            return v;
        };
        CellResult c;
        c.algorithm = fields[0];
        c.rho = num(fields[1]);
        c.pi_upper = num(fields[2]);
        c.accuracy = num(fields[3]);
        c.mean_stopping_time = num(fields[4]);
        c.stopping_time_stderr = num(fields[5]);
        c.truncation_rate = num(fields[6]);
        c.latency_s = num(fields[7]);
        cells.push_back(std::move(c));
    }
    return cells;
}

}  // namespace anodet
