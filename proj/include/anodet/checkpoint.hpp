#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "anodet/config.hpp"
#include "anodet/mlp.hpp"

namespace anodet {

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::ordered_json network_to_json(const NetworkParameters& net) {
    nlohmann::ordered_json j;
    j["head"] = net.head == HeadKind::probability ? "probability" : "scalar";
    auto layers = nlohmann::ordered_json::array();
    for (const Layer& l : net.layers)
        layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
    j["layers"] = layers;
    return j;
}

inline NetworkParameters network_from_json(const nlohmann::json& j) {
    NetworkParameters net;
    const std::string head = j.at("head").get<std::string>();
    if (head == "probability") net.head = HeadKind::probability;
    else if (head == "scalar") net.head = HeadKind::scalar;
    else throw std::runtime_error("checkpoint: unknown head kind '" + head + "'");
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.in = lj.at("in").get<int>();
        l.out = lj.at("out").get<int>();
        l.weights = lj.at("weights").get<std::vector<double>>();
        l.bias = lj.at("bias").get<std::vector<double>>();
        if (l.weights.size() != static_cast<std::size_t>(l.in) * l.out ||
            l.bias.size() != static_cast<std::size_t>(l.out))
            throw std::runtime_error("checkpoint: layer shape mismatch");
        net.layers.push_back(std::move(l));
    }
    if (net.layers.size() != 3) throw std::runtime_error("checkpoint: expected three layers");
    return net;
}

inline nlohmann::ordered_json optimizer_to_json(const OptimizerState& s) {
    nlohmann::ordered_json j;
    j["learning_rate"] = s.learning_rate;
    j["beta1"] = s.beta1;
    j["beta2"] = s.beta2;
    j["epsilon"] = s.epsilon;
    j["step_count"] = s.step_count;
    auto moments = [](const GradientSet& g) {
        auto arr = nlohmann::ordered_json::array();
        for (const Layer& l : g) arr.push_back({{"weights", l.weights}, {"bias", l.bias}});
        return arr;
    };
    j["first_moment"] = moments(s.first_moment);
    j["second_moment"] = moments(s.second_moment);
    return j;
}

inline OptimizerState optimizer_from_json(const nlohmann::json& j, const NetworkParameters& net) {
    OptimizerState s = make_optimizer(net, j.at("learning_rate").get<double>());
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.step_count = j.at("step_count").get<std::int64_t>();
    auto load = [](const nlohmann::json& arr, GradientSet& g) {
        for (std::size_t l = 0; l < g.size(); ++l) {
            g[l].weights = arr.at(l).at("weights").get<std::vector<double>>();
            g[l].bias = arr.at(l).at("bias").get<std::vector<double>>();
        }
    };
    load(j.at("first_moment"), s.first_moment);
    load(j.at("second_moment"), s.second_moment);
    return s;
}

struct Checkpoint {
    std::string algorithm;
    std::uint64_t config_hash = 0;
    NetworkParameters actor;
    NetworkParameters critic;
    OptimizerState actor_opt;
    OptimizerState critic_opt;
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::ordered_json j;
    j["version"] = kCheckpointVersion;
    j["algorithm"] = ckpt.algorithm;
    j["config_hash"] = ckpt.config_hash;
    j["actor"] = network_to_json(ckpt.actor);
    j["critic"] = network_to_json(ckpt.critic);
    j["actor_optimizer"] = optimizer_to_json(ckpt.actor_opt);
    j["critic_optimizer"] = optimizer_to_json(ckpt.critic_opt);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
    out << j.dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version");
    Checkpoint ckpt;
    ckpt.algorithm = j.at("algorithm").get<std::string>();
    ckpt.config_hash = j.at("config_hash").get<std::uint64_t>();
    ckpt.actor = network_from_json(j.at("actor"));
    ckpt.critic = network_from_json(j.at("critic"));
    ckpt.actor_opt = optimizer_from_json(j.at("actor_optimizer"), ckpt.actor);
    ckpt.critic_opt = optimizer_from_json(j.at("critic_optimizer"), ckpt.critic);
    return ckpt;
}

}  // namespace anodet
