#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anodet/types.hpp"

namespace anodet {

enum class Algorithm { proposed, joint, naive, random };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::proposed: return "proposed";
        case Algorithm::joint: return "joint";
        case Algorithm::naive: return "naive";
        case Algorithm::random: return "random";
    }
    return "?";
}

inline bool parse_algorithm(const std::string& s, Algorithm& out) {
    if (s == "proposed") out = Algorithm::proposed;
    else if (s == "joint") out = Algorithm::joint;
    else if (s == "naive") out = Algorithm::naive;
    else if (s == "random") out = Algorithm::random;
    else return false;
    return true;
}

// Prior over process states: disjoint correlated pairs, everything else
// independent Bernoulli with P[normal] = q.
struct PriorConfig {
    int n_processes = 5;
    double normal_probability = 0.8;              // q
    double correlation = 0.6;                     // rho, shared by all pairs
    std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}};  // 0-based internally
};

struct AgentConfig {
    double discount = 0.9;               // gamma
    double confidence_threshold = 0.95;  // pi_upper
    double actor_lr = 5e-4;
    double critic_lr = 5e-3;
    int hidden_width = 64;
    int max_episode_length = 100;
};

enum class ModelSource { estimated, analytic };
enum class OptimizerKind { adam, sgd };

struct TrainingOptions {
    int episodes = 5000;
    int samples = 100000;  // training-set size for the estimators
    ModelSource model_source = ModelSource::estimated;
    OptimizerKind optimizer = OptimizerKind::adam;
    double entropy_bonus = 0.0;  // optional exploration bonus, off by default
};

// Alternatives kept switchable for the exact-joint baseline.
enum class JointStopping { marginal, joint_max };
enum class JointReward { joint_entropy, marginal_entropy };

struct JointOptions {
    JointStopping stopping = JointStopping::marginal;
    JointReward reward = JointReward::joint_entropy;
};

struct SweepSpec {
    std::vector<double> rho_grid = {0.0, 0.6, 1.0};
    std::vector<double> threshold_grid = {0.7, 0.8, 0.9, 0.95};
    std::vector<Algorithm> algorithms = {Algorithm::proposed, Algorithm::joint, Algorithm::naive};
    int episodes_per_cell = 2000;
};

struct ExperimentConfig {
    PriorConfig prior;
    double flip_probability = 0.2;
    AgentConfig agent;
    std::uint64_t seed = 1;
    TrainingOptions training;
    JointOptions joint;
    SweepSpec sweep;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const {
        std::string out;
        for (const auto& v : violations) {
            out += v;
            out += '\n';
        }
        return out;
    }
};

inline ValidationReport validate_config(const ExperimentConfig& c) {
    ValidationReport rep;
    auto fail = [&rep](const std::string& path, const std::string& what) {
        rep.violations.push_back(path + ": " + what);
    };

    if (c.prior.n_processes < 1) fail("n_processes", "must be >= 1");
    if (c.prior.normal_probability < 0.0 || c.prior.normal_probability > 1.0)
        fail("normal_probability", "must lie in [0, 1]");
    if (c.prior.correlation < 0.0 || c.prior.correlation > 1.0)
        fail("correlation", "must lie in [0, 1]");
    if (c.flip_probability < 0.0 || c.flip_probability > 1.0)
        fail("flip_probability", "must lie in [0, 1]");

    std::vector<int> seen;
    for (const auto& [a, b] : c.prior.pairs) {
        if (a < 0 || a >= c.prior.n_processes || b < 0 || b >= c.prior.n_processes)
            fail("pair_structure", "index out of range");
        if (a == b) fail("pair_structure", "pair references one process twice");
        for (int idx : {a, b}) {
            for (int prev : seen)
                if (prev == idx)
                    fail("pair_structure", "process " + std::to_string(idx + 1) +
                                               " appears in more than one pair");
            seen.push_back(idx);
        }
    }

    if (!(c.agent.discount > 0.0 && c.agent.discount < 1.0))
        fail("agent.discount", "must lie in (0, 1)");
    if (!(c.agent.confidence_threshold > 0.5 && c.agent.confidence_threshold < 1.0))
        fail("agent.confidence_threshold", "must lie in (0.5, 1)");
    if (!(c.agent.actor_lr > 0.0)) fail("agent.actor_lr", "must be positive");
    if (!(c.agent.critic_lr > 0.0)) fail("agent.critic_lr", "must be positive");
    if (c.agent.hidden_width < 1) fail("agent.hidden_width", "must be >= 1");
    if (c.agent.max_episode_length < 1) fail("agent.max_episode_length", "must be >= 1");

    if (c.training.episodes < 0) fail("training.episodes", "must be >= 0");
    if (c.training.samples < 1) fail("training.samples", "must be >= 1");

    if (c.sweep.rho_grid.empty()) fail("sweep.rho_grid", "must be non-empty");
    if (c.sweep.threshold_grid.empty()) fail("sweep.threshold_grid", "must be non-empty");
    if (c.sweep.algorithms.empty()) fail("sweep.algorithms", "must be non-empty");
    if (c.sweep.episodes_per_cell < 1) fail("sweep.episodes_per_cell", "must be >= 1");
    for (double r : c.sweep.rho_grid)
        if (r < 0.0 || r > 1.0) fail("sweep.rho_grid", "values must lie in [0, 1]");
    for (double t : c.sweep.threshold_grid)
        if (!(t > 0.5 && t < 1.0)) fail("sweep.threshold_grid", "values must lie in (0.5, 1)");

    return rep;
}

// --- JSON (de)serialization ------------------------------------------------
// Pair indices are 1-based in the file, 0-based in memory.

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["n_processes"] = c.prior.n_processes;
    j["normal_probability"] = c.prior.normal_probability;
    j["correlation"] = c.prior.correlation;
    j["flip_probability"] = c.flip_probability;
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& [a, b] : c.prior.pairs) pairs.push_back({a + 1, b + 1});
    j["pair_structure"] = pairs;
    j["agent"] = {{"discount", c.agent.discount},
                  {"confidence_threshold", c.agent.confidence_threshold},
                  {"actor_lr", c.agent.actor_lr},
                  {"critic_lr", c.agent.critic_lr},
                  {"hidden_width", c.agent.hidden_width},
                  {"max_episode_length", c.agent.max_episode_length}};
    j["seed"] = c.seed;
    j["training"] = {{"episodes", c.training.episodes},
                     {"samples", c.training.samples},
                     {"model_source", c.training.model_source == ModelSource::analytic
                                          ? "analytic"
                                          : "estimated"},
                     {"optimizer", c.training.optimizer == OptimizerKind::sgd ? "sgd" : "adam"},
                     {"entropy_bonus", c.training.entropy_bonus}};
    j["joint"] = {{"stopping", c.joint.stopping == JointStopping::joint_max ? "joint-max"
                                                                            : "marginal"},
                  {"reward", c.joint.reward == JointReward::marginal_entropy
                                 ? "marginal-entropy"
                                 : "joint-entropy"}};
    auto algos = nlohmann::ordered_json::array();
    for (Algorithm a : c.sweep.algorithms) algos.push_back(algorithm_name(a));
    j["sweep"] = {{"rho_grid", c.sweep.rho_grid},
                  {"threshold_grid", c.sweep.threshold_grid},
                  {"algorithms", algos},
                  {"episodes_per_cell", c.sweep.episodes_per_cell}};
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.prior.n_processes = j.at("n_processes").get<int>();
    c.prior.normal_probability = j.at("normal_probability").get<double>();
    c.prior.correlation = j.at("correlation").get<double>();
    c.flip_probability = j.at("flip_probability").get<double>();
    c.prior.pairs.clear();
    for (const auto& p : j.at("pair_structure")) {
        if (!p.is_array() || p.size() != 2)
            throw std::runtime_error("pair_structure entries must be two-element arrays");
        c.prior.pairs.emplace_back(p[0].get<int>() - 1, p[1].get<int>() - 1);
    }
    const auto& a = j.at("agent");
    c.agent.discount = a.at("discount").get<double>();
    c.agent.confidence_threshold = a.at("confidence_threshold").get<double>();
    c.agent.actor_lr = a.at("actor_lr").get<double>();
    c.agent.critic_lr = a.at("critic_lr").get<double>();
    c.agent.hidden_width = a.at("hidden_width").get<int>();
    c.agent.max_episode_length = a.at("max_episode_length").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("training")) {
        const auto& t = j.at("training");
        if (t.contains("episodes")) c.training.episodes = t.at("episodes").get<int>();
        if (t.contains("samples")) c.training.samples = t.at("samples").get<int>();
        if (t.contains("model_source")) {
            std::string m = t.at("model_source").get<std::string>();
            if (m == "analytic") c.training.model_source = ModelSource::analytic;
            else if (m == "estimated") c.training.model_source = ModelSource::estimated;
            else throw std::runtime_error("training.model_source: unknown value '" + m + "'");
        }
        if (t.contains("optimizer")) {
            std::string o = t.at("optimizer").get<std::string>();
            if (o == "sgd") c.training.optimizer = OptimizerKind::sgd;
            else if (o == "adam") c.training.optimizer = OptimizerKind::adam;
            else throw std::runtime_error("training.optimizer: unknown value '" + o + "'");
        }
        if (t.contains("entropy_bonus")) c.training.entropy_bonus = t.at("entropy_bonus").get<double>();
    }
    if (j.contains("joint")) {
        const auto& jo = j.at("joint");
        if (jo.contains("stopping")) {
            std::string s = jo.at("stopping").get<std::string>();
            if (s == "joint-max") c.joint.stopping = JointStopping::joint_max;
            else if (s == "marginal") c.joint.stopping = JointStopping::marginal;
            else throw std::runtime_error("joint.stopping: unknown value '" + s + "'");
        }
        if (jo.contains("reward")) {
            std::string r = jo.at("reward").get<std::string>();
            if (r == "marginal-entropy") c.joint.reward = JointReward::marginal_entropy;
            else if (r == "joint-entropy") c.joint.reward = JointReward::joint_entropy;
            else throw std::runtime_error("joint.reward: unknown value '" + r + "'");
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        if (s.contains("rho_grid")) c.sweep.rho_grid = s.at("rho_grid").get<std::vector<double>>();
        if (s.contains("threshold_grid"))
            c.sweep.threshold_grid = s.at("threshold_grid").get<std::vector<double>>();
        if (s.contains("algorithms")) {
            c.sweep.algorithms.clear();
            for (const auto& name : s.at("algorithms")) {
                Algorithm alg;
                if (!parse_algorithm(name.get<std::string>(), alg))
                    throw std::runtime_error("sweep.algorithms: unknown algorithm '" +
                                             name.get<std::string>() + "'");
                c.sweep.algorithms.push_back(alg);
            }
        }
        if (s.contains("episodes_per_cell"))
            c.sweep.episodes_per_cell = s.at("episodes_per_cell").get<int>();
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

// FNV-1a over the canonical JSON dump; identifies the config in checkpoints
// and result manifests.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    std::string dump = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace anodet
