#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "anodet/types.hpp"

namespace anodet {

// Posterior over all 2^N joint configurations. Process 1 (index 0) is the
// most significant bit of the configuration index.
struct JointBelief {
    int n_processes = 0;
    std::vector<double> p;

    static JointBelief uniform(int n) {
        JointBelief j;
        j.n_processes = n;
        j.p.assign(std::size_t{1} << n, 1.0 / static_cast<double>(std::size_t{1} << n));
        return j;
    }

    static JointBelief from_pmf(int n, std::vector<double> pmf) {
        if (pmf.size() != (std::size_t{1} << n))
            throw std::invalid_argument("JointBelief: pmf size must be 2^N");
        JointBelief j;
        j.n_processes = n;
        j.p = std::move(pmf);
        return j;
    }

    int state_bit(std::size_t config, int process) const {
        return static_cast<int>((config >> (n_processes - 1 - process)) & 1u);
    }
};

struct RewardRecord {
    double value = 0.0;  // nats
    int time_index = 0;
};

// Binary entropy in nats, with 0 ln 0 := 0.
inline double entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log(x) - (1.0 - x) * std::log(1.0 - x);
}

inline double joint_entropy(const JointBelief& joint) {
    double h = 0.0;
    for (double v : joint.p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

// P[y_a | s_i = s] = sum_{s'} P[y_a | s_a = s'] P[s_a = s' | s_i = s].
inline double likelihood(const DependencyModel& dep, const Channel& channel, int observed,
                         int obs_value, int target, int hypothesis) {
    double acc = 0.0;
    for (int s_prime = 0; s_prime < 2; ++s_prime)
        acc += channel.likelihood(obs_value, s_prime) * dep.at(target, observed, hypothesis, s_prime);
    return acc;
}

// Marginal recursion: every entry gets a per-process Bayes update driven by
// the pairwise conditionals. Entries independent of the observed process are
// left unchanged by the arithmetic itself.
inline Belief update_marginal(const Belief& belief, const DependencyModel& dep,
                              const Channel& channel, const Observation& obs) {
    Belief next(belief.size());
    for (std::size_t i = 0; i < belief.size(); ++i) {
        const double l0 = clamp_prob(likelihood(dep, channel, obs.process, obs.value,
                                                static_cast<int>(i), 0));
        const double l1 = clamp_prob(likelihood(dep, channel, obs.process, obs.value,
                                                static_cast<int>(i), 1));
        const double numer = belief[i] * l0;
        const double denom = numer + (1.0 - belief[i]) * l1;
        next[i] = clamp_prob(numer / denom);
    }
    return next;
}

// Naive recursion: only the observed process is updated; any statistical
// dependence on the other processes is ignored.
inline Belief update_naive(const Belief& belief, const Channel& channel, const Observation& obs) {
    Belief next = belief;
    const double l0 = clamp_prob(channel.likelihood(obs.value, 0));
    const double l1 = clamp_prob(channel.likelihood(obs.value, 1));
    const double numer = belief[obs.process] * l0;
    next[obs.process] = clamp_prob(numer / (numer + (1.0 - belief[obs.process]) * l1));
    return next;
}

// Exact Bayes on the full joint pmf.
inline JointBelief update_joint(const JointBelief& joint, const Channel& channel,
                                const Observation& obs) {
    JointBelief next = joint;
    double total = 0.0;
    for (std::size_t c = 0; c < next.p.size(); ++c) {
        const int s_a = next.state_bit(c, obs.process);
        double v = next.p[c] * channel.likelihood(obs.value, s_a);
        if (v < kProbEps) v = kProbEps;
        next.p[c] = v;
        total += v;
    }
    for (double& v : next.p) v /= total;
    return next;
}

inline Belief marginalize(const JointBelief& joint) {
    Belief out(joint.n_processes, 0.0);
    for (int i = 0; i < joint.n_processes; ++i) {
        double normal = 0.0;
        for (std::size_t c = 0; c < joint.p.size(); ++c)
            if (joint.state_bit(c, i) == 0) normal += joint.p[c];
        out[i] = clamp_prob(normal);
    }
    return out;
}

// r(k) = sum_i [H(sigma_i(k-1)) - H(sigma_i(k))]
inline RewardRecord reward(const Belief& previous, const Belief& current, int time_index = 0) {
    if (previous.size() != current.size())
        throw std::invalid_argument("reward: belief length mismatch");
    double r = 0.0;
    for (std::size_t i = 0; i < previous.size(); ++i)
        r += entropy(previous[i]) - entropy(current[i]);
    return RewardRecord{r, time_index};
}

inline StateEstimate extract_estimate(const Belief& belief) {
    StateEstimate est;
    est.estimate.resize(belief.size());
    est.confidence.resize(belief.size());
    for (std::size_t i = 0; i < belief.size(); ++i) {
        // ties (sigma = 0.5) are declared normal
        est.estimate[i] = belief[i] >= 1.0 - belief[i] ? 0 : 1;
        est.confidence[i] = belief[i] >= 0.5 ? belief[i] : 1.0 - belief[i];
    }
    return est;
}

// Stop once every process is confidently classified (strict inequality).
inline bool should_stop(const Belief& belief, double confidence_threshold) {
    for (double sigma : belief) {
        const double confidence = sigma >= 0.5 ? sigma : 1.0 - sigma;
        if (!(confidence > confidence_threshold)) return false;
    }
    return true;
}

}  // namespace anodet
