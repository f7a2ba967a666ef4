#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "anodet/belief.hpp"
#include "anodet/config.hpp"
#include "anodet/env.hpp"
#include "anodet/mlp.hpp"
#include "anodet/rng.hpp"

namespace anodet {

// Everything an episode needs besides the networks: the pairwise conditional
// model, the initial belief, and (for the exact-joint baseline) the prior pmf.
struct BeliefModels {
    DependencyModel dependency;
    Belief prior;
    std::vector<double> joint_prior;
};

inline BeliefModels build_models(const ExperimentConfig& cfg, RandomStream& data_rng,
                                 bool need_joint) {
    BeliefModels models;
    if (cfg.training.model_source == ModelSource::analytic) {
        models.dependency = dependency_from_prior(cfg.prior);
        models.prior = prior_beliefs_from_config(cfg.prior);
        if (need_joint) models.joint_prior = joint_prior_from_config(cfg.prior);
    } else {
        TrainingDataset data = generate_training_data(cfg.prior, cfg.training.samples, data_rng);
        models.dependency = estimate_dependency_model(data);
        models.prior = estimate_prior_beliefs(data);
        if (need_joint) models.joint_prior = estimate_joint_prior(data);
    }
    return models;
}

struct AgentNetworks {
    NetworkParameters actor;
    NetworkParameters critic;
    OptimizerState actor_opt;
    OptimizerState critic_opt;
};

// Actor and critic widths depend on the algorithm's state representation:
// the joint baseline feeds the 2^N pmf where the others feed the N-vector.
inline AgentNetworks make_agent(Algorithm alg, const ExperimentConfig& cfg, RandomStream& rng) {
    const int n = cfg.prior.n_processes;
    const int state_width = alg == Algorithm::joint ? 1 << n : n;
    AgentNetworks nets;
    nets.actor = make_network(state_width, cfg.agent.hidden_width, n, HeadKind::probability, rng);
    nets.critic =
        make_network(2 * state_width + 1, cfg.agent.hidden_width, 1, HeadKind::scalar, rng);
    nets.actor_opt = make_optimizer(nets.actor, cfg.agent.actor_lr);
    nets.critic_opt = make_optimizer(nets.critic, cfg.agent.critic_lr);
    return nets;
}

enum class SelectionMode { sample, greedy };

inline int select_action(const NetworkParameters& actor, std::span<const double> state,
                         RandomStream& rng, SelectionMode mode = SelectionMode::sample) {
    const std::vector<double> probs = forward_actor(actor, state);
    for (double p : probs)
        if (!std::isfinite(p)) throw std::runtime_error("select_action: non-finite actor output");
    if (mode == SelectionMode::greedy) {
        int best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i)
            if (probs[i] > probs[best]) best = static_cast<int>(i);
        return best;
    }
    return static_cast<int>(rng.discrete(probs));
}

// delta = r + gamma * V(next) - V(prev), with V(next) := 0 on terminal steps.
inline double td_error(double r, double v_current, double v_previous, double gamma,
                       bool terminal) {
    return r + gamma * (terminal ? 0.0 : v_current) - v_previous;
}

struct EpisodeStep {
    int time_index = 0;
    int action = 0;
    int observation = 0;
    Belief belief_before;
    Belief belief_after;
    double reward = 0.0;
    double td = std::numeric_limits<double>::quiet_NaN();  // NaN when not training
    std::vector<double> joint_before;  // joint baseline only
    std::vector<double> joint_after;
};

struct EpisodeTrace {
    std::vector<EpisodeStep> steps;
    int stopping_time = 0;
    bool truncated = false;
    StateEstimate estimate;
    StateVector ground_truth;
    bool correct = false;
};

inline double trace_reward_sum(const EpisodeTrace& trace) {
    double sum = 0.0;
    for (const auto& step : trace.steps) sum += step.reward;
    return sum;
}

namespace detail {

inline std::vector<double> critic_input(const std::vector<double>& state_now,
                                        const std::vector<double>& state_prev, double r) {
    std::vector<double> theta;
    theta.reserve(state_now.size() + state_prev.size() + 1);
    theta.insert(theta.end(), state_now.begin(), state_now.end());
    theta.insert(theta.end(), state_prev.begin(), state_prev.end());
    theta.push_back(r);
    return theta;
}

inline void apply_step(NetworkParameters& net, const GradientSet& grads, OptimizerState& opt,
                       OptimizerKind kind, StepDirection direction) {
    if (kind == OptimizerKind::adam) adam_step(net, grads, opt, direction);
    else sgd_step(net, grads, opt.learning_rate, direction);
}

}  // namespace detail

// One pass of the detection loop. With `learning` set this is Algorithm 1's
// inner loop (online actor ascent on delta * grad log mu, critic descent on
// delta^2); without it the same loop evaluates a frozen policy.
inline EpisodeTrace run_episode_loop(Algorithm alg, AgentNetworks* nets,
                                     const BeliefModels& models, const ExperimentConfig& cfg,
                                     const Episode& episode, RandomStream& rng, bool learning,
                                     SelectionMode mode = SelectionMode::sample) {
    const int n = cfg.prior.n_processes;
    const double pi_upper = cfg.agent.confidence_threshold;
    const bool is_joint = alg == Algorithm::joint;
    if (learning && nets == nullptr)
        throw std::invalid_argument("run_episode_loop: learning requires networks");

    JointBelief joint;
    if (is_joint) {
        if (models.joint_prior.empty())
            throw std::invalid_argument("run_episode_loop: joint baseline needs a joint prior");
        joint = JointBelief::from_pmf(n, models.joint_prior);
    }
    Belief sigma = is_joint ? marginalize(joint) : models.prior;

    // MDP state as the actor/critic see it
    auto policy_state = [&](const Belief& marginal, const JointBelief& j) -> const std::vector<double>& {
        return is_joint ? j.p : marginal;
    };

    EpisodeTrace trace;
    trace.ground_truth = episode.ground_truth;

    std::vector<double> theta_prev =
        detail::critic_input(policy_state(sigma, joint), policy_state(sigma, joint), 0.0);

    for (int k = 1; k <= cfg.agent.max_episode_length; ++k) {
        EpisodeStep step;
        step.time_index = k;
        step.belief_before = sigma;
        if (is_joint) step.joint_before = joint.p;

        const std::vector<double>& actor_state = policy_state(sigma, joint);
        int action;
        if (alg == Algorithm::random) action = static_cast<int>(rng.uniform_index(n));
        else action = select_action(nets->actor, actor_state, rng, mode);

        const Observation obs = observe(episode, action, rng, k);

        Belief sigma_next;
        JointBelief joint_next;
        double r = 0.0;
        if (is_joint) {
            joint_next = update_joint(joint, episode.channel, obs);
            sigma_next = marginalize(joint_next);
            if (cfg.joint.reward == JointReward::joint_entropy)
                r = joint_entropy(joint) - joint_entropy(joint_next);
            else
                r = reward(sigma, sigma_next, k).value;
        } else if (alg == Algorithm::naive) {
            sigma_next = update_naive(sigma, episode.channel, obs);
            r = reward(sigma, sigma_next, k).value;
        } else {
            sigma_next = update_marginal(sigma, models.dependency, episode.channel, obs);
            r = reward(sigma, sigma_next, k).value;
        }

        bool stop;
        if (is_joint && cfg.joint.stopping == JointStopping::joint_max) {
            double max_cell = 0.0;
            for (double v : joint_next.p)
                if (v > max_cell) max_cell = v;
            stop = max_cell > pi_upper;
        } else {
            stop = should_stop(sigma_next, pi_upper);
        }
        const bool at_cap = k == cfg.agent.max_episode_length;
        const bool terminal = stop || at_cap;

        step.action = action;
        step.observation = obs.value;
        step.belief_after = sigma_next;
        step.reward = r;
        if (is_joint) step.joint_after = joint_next.p;

        if (learning) {
            const std::vector<double> theta_cur =
                detail::critic_input(policy_state(sigma_next, joint_next), actor_state, r);
            const ForwardTrace critic_prev = forward(nets->critic, theta_prev);
            const ForwardTrace critic_cur = forward(nets->critic, theta_cur);
            const double v_prev = critic_prev.out[0];
            const double v_cur = critic_cur.out[0];
            if (!std::isfinite(v_prev) || !std::isfinite(v_cur))
                throw std::runtime_error("episode aborted at step " + std::to_string(k) +
                                         ": non-finite critic output");
            const double delta = td_error(r, v_cur, v_prev, cfg.agent.discount, terminal);
            step.td = delta;

            GradientSet actor_grads = grad_log_prob(nets->actor, actor_state, action);
            scale_gradients(actor_grads, delta);
            if (cfg.training.entropy_bonus != 0.0)
                accumulate_gradients(actor_grads, grad_policy_entropy(nets->actor, actor_state),
                                     cfg.training.entropy_bonus);
            detail::apply_step(nets->actor, actor_grads, nets->actor_opt,
                               cfg.training.optimizer, StepDirection::ascend);

            // d(delta^2)/d beta with the TD target held fixed
            GradientSet critic_grads = backward(nets->critic, critic_prev, std::vector<double>{1.0});
            scale_gradients(critic_grads, -2.0 * delta);
            detail::apply_step(nets->critic, critic_grads, nets->critic_opt,
                               cfg.training.optimizer, StepDirection::descend);

            theta_prev = theta_cur;
        }

        trace.steps.push_back(std::move(step));
        sigma = std::move(sigma_next);
        if (is_joint) joint = std::move(joint_next);

        if (terminal) {
            trace.stopping_time = k;
            trace.truncated = !stop;
            break;
        }
    }

    if (is_joint && cfg.joint.stopping == JointStopping::joint_max) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < joint.p.size(); ++c)
            if (joint.p[c] > joint.p[best]) best = c;
        trace.estimate.estimate.resize(n);
        for (int i = 0; i < n; ++i)
            trace.estimate.estimate[i] = static_cast<std::uint8_t>(joint.state_bit(best, i));
        trace.estimate.confidence = extract_estimate(sigma).confidence;
    } else {
        trace.estimate = extract_estimate(sigma);
    }
    trace.correct = trace.estimate.estimate == trace.ground_truth;
    return trace;
}

inline EpisodeTrace train_episode(AgentNetworks& nets, Algorithm alg, const BeliefModels& models,
                                  const ExperimentConfig& cfg, const Episode& episode,
                                  RandomStream& rng) {
    return run_episode_loop(alg, &nets, models, cfg, episode, rng, /*learning=*/true);
}

inline EpisodeTrace run_episode(Algorithm alg, const AgentNetworks* nets,
                                const BeliefModels& models, const ExperimentConfig& cfg,
                                const Episode& episode, RandomStream& rng,
                                SelectionMode mode = SelectionMode::sample) {
    return run_episode_loop(alg, const_cast<AgentNetworks*>(nets), models, cfg, episode, rng,
                            /*learning=*/false, mode);
}

struct EpisodeSummary {
    int episode = 0;
    double reward_sum = 0.0;
    int stopping_time = 0;
    bool correct = false;
};

struct TrainResult {
    AgentNetworks nets;
    std::vector<EpisodeSummary> curve;
};

// Stream ids under one training seed: 0 initializes the networks, 1 + e
// drives episode e. Identical seeds give bit-identical runs.
inline TrainResult train(Algorithm alg, const ExperimentConfig& cfg, const BeliefModels& models,
                         std::uint64_t train_seed) {
    if (alg == Algorithm::random)
        throw std::invalid_argument("train: the uniform-random policy has nothing to train");
    RandomStream init_rng(train_seed, 0);
    TrainResult result;
    result.nets = make_agent(alg, cfg, init_rng);
    result.curve.reserve(cfg.training.episodes);
    for (int e = 0; e < cfg.training.episodes; ++e) {
        RandomStream rng(train_seed, 1 + static_cast<std::uint64_t>(e));
        Episode episode{sample_state(cfg.prior, rng), Channel{cfg.flip_probability},
                        1 + static_cast<std::uint64_t>(e)};
        EpisodeTrace trace = train_episode(result.nets, alg, models, cfg, episode, rng);
        result.curve.push_back(EpisodeSummary{e + 1, trace_reward_sum(trace),
                                              trace.stopping_time, trace.correct});
    }
    return result;
}

// Frozen-policy evaluation. Episode e owns stream 1 + e, so results do not
// depend on the number of worker threads.
inline std::vector<EpisodeTrace> evaluate(Algorithm alg, const AgentNetworks* nets,
                                          const BeliefModels& models, const ExperimentConfig& cfg,
                                          int episodes, std::uint64_t eval_seed,
                                          int threads = 1) {
    std::vector<EpisodeTrace> traces(episodes);
    auto worker = [&](int begin, int end) {
        for (int e = begin; e < end; ++e) {
            RandomStream rng(eval_seed, 1 + static_cast<std::uint64_t>(e));
            Episode episode{sample_state(cfg.prior, rng), Channel{cfg.flip_probability},
                            1 + static_cast<std::uint64_t>(e)};
            traces[e] = run_episode(alg, nets, models, cfg, episode, rng);
        }
    };
    if (threads <= 1) {
        worker(0, episodes);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (episodes + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = begin + chunk < episodes ? begin + chunk : episodes;
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return traces;
}

}  // namespace anodet
