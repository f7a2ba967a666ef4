#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anodet/config.hpp"
#include "anodet/rng.hpp"
#include "anodet/types.hpp"

namespace anodet {

// One detection episode: the ground truth is drawn once and held fixed, so
// observations are i.i.d. conditioned on it.
struct Episode {
    StateVector ground_truth;
    Channel channel;
    std::uint64_t stream_id = 0;
};

struct TrainingDataset {
    int n_processes = 0;
    std::vector<StateVector> samples;
};

// Joint pmf of one correlated pair. The mixed configurations each carry
// (1-rho)q(1-q), which keeps both marginals at q for every rho.
struct PairPmf {
    double p00, p01, p10, p11;
};

inline PairPmf pair_pmf(double q, double rho) {
    const double mixed = (1.0 - rho) * q * (1.0 - q);
    return {q * q + rho * q * (1.0 - q), mixed, mixed,
            (1.0 - q) * (1.0 - q) + rho * q * (1.0 - q)};
}

inline StateVector sample_state(const PriorConfig& prior, RandomStream& rng) {
    StateVector s(prior.n_processes, 0);
    std::vector<std::uint8_t> covered(prior.n_processes, 0);
    const double q = prior.normal_probability;
    const PairPmf pmf = pair_pmf(q, prior.correlation);
    for (const auto& [a, b] : prior.pairs) {
        const double u = rng.uniform();
        if (u < pmf.p00) {
            s[a] = 0; s[b] = 0;
        } else if (u < pmf.p00 + pmf.p01) {
            s[a] = 0; s[b] = 1;
        } else if (u < pmf.p00 + pmf.p01 + pmf.p10) {
            s[a] = 1; s[b] = 0;
        } else {
            s[a] = 1; s[b] = 1;
        }
        covered[a] = covered[b] = 1;
    }
    for (int i = 0; i < prior.n_processes; ++i)
        if (!covered[i]) s[i] = rng.bernoulli(q) ? 0 : 1;
    return s;
}

inline Observation observe(const Episode& episode, int process, RandomStream& rng,
                           int time_index = 0) {
    if (process < 0 || process >= static_cast<int>(episode.ground_truth.size()))
        throw std::out_of_range("observe: process index out of range");
    const int truth = episode.ground_truth[process];
    const int value = rng.bernoulli(episode.channel.flip_probability) ? 1 - truth : truth;
    return Observation{process, value, time_index};
}

inline TrainingDataset generate_training_data(const PriorConfig& prior, int count,
                                              RandomStream& rng) {
    if (count < 1) throw std::invalid_argument("generate_training_data: count must be >= 1");
    TrainingDataset data;
    data.n_processes = prior.n_processes;
    data.samples.reserve(count);
    for (int i = 0; i < count; ++i) data.samples.push_back(sample_state(prior, rng));
    return data;
}

// Empirical pairwise conditionals with add-one smoothing per cell; the
// diagonal is forced to the identity coupling.
inline DependencyModel estimate_dependency_model(const TrainingDataset& data) {
    if (data.samples.empty())
        throw std::invalid_argument("estimate_dependency_model: empty dataset");
    const int n = data.n_processes;
    DependencyModel model(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double count[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
            for (const auto& s : data.samples) count[s[i]][s[j]] += 1.0;
            for (int si = 0; si < 2; ++si) {
                const double denom = count[si][0] + count[si][1] + 2.0;
                model.set(i, j, si, 0, (count[si][0] + 1.0) / denom);
                model.set(i, j, si, 1, (count[si][1] + 1.0) / denom);
            }
        }
    }
    return model;
}

// Empirical P[normal] per process, smoothed and clamped.
inline Belief estimate_prior_beliefs(const TrainingDataset& data) {
    if (data.samples.empty())
        throw std::invalid_argument("estimate_prior_beliefs: empty dataset");
    const int n = data.n_processes;
    Belief prior(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double normal = 0.0;
        for (const auto& s : data.samples)
            if (s[i] == 0) normal += 1.0;
        prior[i] = clamp_prob((normal + 1.0) / (static_cast<double>(data.samples.size()) + 2.0));
    }
    return prior;
}

// Empirical joint pmf over all 2^N configurations, smoothed. Process 1 maps
// to the most significant bit of the configuration index.
inline std::vector<double> estimate_joint_prior(const TrainingDataset& data) {
    if (data.samples.empty())
        throw std::invalid_argument("estimate_joint_prior: empty dataset");
    const int n = data.n_processes;
    if (n > 20) throw std::invalid_argument("estimate_joint_prior: 2^N table too large");
    const std::size_t cells = std::size_t{1} << n;
    std::vector<double> counts(cells, 1.0);  // add-one smoothing
    for (const auto& s : data.samples) {
        std::size_t c = 0;
        for (int i = 0; i < n; ++i) c = (c << 1) | s[i];
        counts[c] += 1.0;
    }
    const double total = static_cast<double>(data.samples.size()) + static_cast<double>(cells);
    for (double& c : counts) c /= total;
    return counts;
}

// --- Analytic counterparts, exact at rho = 0 and rho = 1 --------------------

inline DependencyModel dependency_from_prior(const PriorConfig& prior) {
    const int n = prior.n_processes;
    const double q = prior.normal_probability;
    const double rho = prior.correlation;
    DependencyModel model(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            // independent unless (i, j) is a configured pair
            model.set(i, j, 0, 0, q);
            model.set(i, j, 0, 1, 1.0 - q);
            model.set(i, j, 1, 0, q);
            model.set(i, j, 1, 1, 1.0 - q);
        }
    for (const auto& [a, b] : prior.pairs) {
        // P[s_j=0 | s_i=0] = q + rho(1-q); P[s_j=0 | s_i=1] = (1-rho)q
        const double c00 = q + rho * (1.0 - q);
        const double c01 = (1.0 - rho) * (1.0 - q);
        const double c10 = (1.0 - rho) * q;
        const double c11 = (1.0 - q) + rho * q;
        for (const auto& [i, j] : {std::pair{a, b}, std::pair{b, a}}) {
            model.set(i, j, 0, 0, c00);
            model.set(i, j, 0, 1, c01);
            model.set(i, j, 1, 0, c10);
            model.set(i, j, 1, 1, c11);
        }
    }
    return model;
}

inline Belief prior_beliefs_from_config(const PriorConfig& prior) {
    return Belief(prior.n_processes, clamp_prob(prior.normal_probability));
}

inline std::vector<double> joint_prior_from_config(const PriorConfig& prior) {
    const int n = prior.n_processes;
    if (n > 20) throw std::invalid_argument("joint_prior_from_config: 2^N table too large");
    const double q = prior.normal_probability;
    const PairPmf pmf = pair_pmf(q, prior.correlation);
    std::vector<std::uint8_t> covered(n, 0);
    for (const auto& [a, b] : prior.pairs) covered[a] = covered[b] = 1;

    const std::size_t cells = std::size_t{1} << n;
    std::vector<double> joint(cells, 1.0);
    for (std::size_t c = 0; c < cells; ++c) {
        auto bit = [&](int i) { return static_cast<int>((c >> (n - 1 - i)) & 1u); };
        double p = 1.0;
        for (const auto& [a, b] : prior.pairs) {
            const int sa = bit(a), sb = bit(b);
            p *= sa == 0 ? (sb == 0 ? pmf.p00 : pmf.p01) : (sb == 0 ? pmf.p10 : pmf.p11);
        }
        for (int i = 0; i < n; ++i)
            if (!covered[i]) p *= bit(i) == 0 ? q : 1.0 - q;
        joint[c] = p;
    }
    return joint;
}

// --- Dataset text format: one sample per line, N space-separated bits -------

inline void save_dataset(const TrainingDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
    for (const auto& s : data.samples) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out << ' ';
            out << static_cast<int>(s[i]);
        }
        out << '\n';
    }
}

inline TrainingDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    TrainingDataset data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        StateVector s;
        int bit;
        while (row >> bit) {
            if (bit != 0 && bit != 1) throw std::runtime_error("dataset: non-binary entry");
            s.push_back(static_cast<std::uint8_t>(bit));
        }
        if (data.samples.empty()) data.n_processes = static_cast<int>(s.size());
        else if (static_cast<int>(s.size()) != data.n_processes)
            throw std::runtime_error("dataset: inconsistent row length");
        data.samples.push_back(std::move(s));
    }
    if (data.samples.empty()) throw std::runtime_error("dataset: file is empty");
    return data;
}

}  // namespace anodet
