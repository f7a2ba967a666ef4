#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace anodet {

// Probabilities everywhere in the library are clamped to [kProbEps, 1 - kProbEps]
// so that entropy and Bayes denominators stay finite.
inline constexpr double kProbEps = 1e-12;

inline double clamp_prob(double p) {
    if (p < kProbEps) return kProbEps;
    if (p > 1.0 - kProbEps) return 1.0 - kProbEps;
    return p;
}

// Hidden truth: one bit per process, 0 = normal, 1 = anomalous.
using StateVector = std::vector<std::uint8_t>;

// Per-process posterior probability of being normal. Entries stay inside
// [kProbEps, 1 - kProbEps].
using Belief = std::vector<double>;

inline bool is_binary(const StateVector& s) {
    for (auto b : s)
        if (b != 0 && b != 1) return false;
    return true;
}

// Binary symmetric observation channel.
struct Channel {
    double flip_probability = 0.2;

    // P[y | true state s'] for binary y, s'
    double likelihood(int y, int true_state) const {
        return y == true_state ? 1.0 - flip_probability : flip_probability;
    }
};

struct Observation {
    int process = 0;  // 0-based internally; 1-based at external interfaces
    int value = 0;
    int time_index = 0;
};

// Pairwise conditionals P[s_j = s' | s_i = s], an N x N x 2 x 2 table.
// Rows (fixed i, j, s) sum to one; the diagonal is the identity coupling.
class DependencyModel {
public:
    DependencyModel() = default;
    explicit DependencyModel(int n) : n_(n), table_(static_cast<std::size_t>(n) * n * 4, 0.0) {
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < 2; ++s)
                for (int sp = 0; sp < 2; ++sp) set(i, i, s, sp, s == sp ? 1.0 : 0.0);
    }

    int size() const { return n_; }

    double at(int i, int j, int s, int s_prime) const {
        return table_[index(i, j, s, s_prime)];
    }

    void set(int i, int j, int s, int s_prime, double p) {
        table_[index(i, j, s, s_prime)] = p;
    }

    bool row_stochastic(double tol = 1e-9) const {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                for (int s = 0; s < 2; ++s)
                    if (std::abs(at(i, j, s, 0) + at(i, j, s, 1) - 1.0) > tol) return false;
        return true;
    }

private:
    std::size_t index(int i, int j, int s, int s_prime) const {
        return ((static_cast<std::size_t>(i) * n_ + j) * 2 + s) * 2 + s_prime;
    }

    int n_ = 0;
    std::vector<double> table_;
};

struct StateEstimate {
    StateVector estimate;
    std::vector<double> confidence;  // max{sigma_i, 1 - sigma_i}, in [0.5, 1]
};

}  // namespace anodet
