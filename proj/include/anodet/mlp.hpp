#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "anodet/rng.hpp"

namespace anodet {

enum class HeadKind { probability, scalar };

struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;     // out
};

// Three affine stages with ReLU between them. The probability head applies a
// softmax; the scalar head returns the single raw output.
struct NetworkParameters {
    HeadKind head = HeadKind::scalar;
    std::vector<Layer> layers;

    int input_width() const { return layers.front().in; }
    int output_width() const { return layers.back().out; }
};

using GradientSet = std::vector<Layer>;

inline NetworkParameters make_network(int input, int hidden, int output, HeadKind head,
                                      RandomStream& rng) {
    if (input < 1 || hidden < 1 || output < 1)
        throw std::invalid_argument("make_network: widths must be positive");
    NetworkParameters net;
    net.head = head;
    const int dims[4] = {input, hidden, hidden, output};
    for (int l = 0; l < 3; ++l) {
        Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.weights.resize(static_cast<std::size_t>(layer.out) * layer.in);
        layer.bias.assign(layer.out, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (double& w : layer.weights) w = (2.0 * rng.uniform() - 1.0) * bound;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

inline GradientSet zeros_like(const NetworkParameters& net) {
    GradientSet g;
    for (const Layer& l : net.layers) {
        Layer z;
        z.in = l.in;
        z.out = l.out;
        z.weights.assign(l.weights.size(), 0.0);
        z.bias.assign(l.bias.size(), 0.0);
        g.push_back(std::move(z));
    }
    return g;
}

inline void scale_gradients(GradientSet& grads, double factor) {
    for (Layer& l : grads) {
        for (double& w : l.weights) w *= factor;
        for (double& b : l.bias) b *= factor;
    }
}

inline void accumulate_gradients(GradientSet& into, const GradientSet& from, double factor = 1.0) {
    for (std::size_t l = 0; l < into.size(); ++l) {
        for (std::size_t k = 0; k < into[l].weights.size(); ++k)
            into[l].weights[k] += factor * from[l].weights[k];
        for (std::size_t k = 0; k < into[l].bias.size(); ++k)
            into[l].bias[k] += factor * from[l].bias[k];
    }
}

// Activations kept from a forward pass; backward consumes them.
struct ForwardTrace {
    std::vector<double> input;
    std::vector<double> pre1, act1, pre2, act2;
    std::vector<double> out;    // pre-head output (logits for the probability head)
    std::vector<double> probs;  // softmax output, probability head only
};

namespace detail {

inline void affine(const Layer& layer, std::span<const double> x, std::vector<double>& y) {
    y.assign(layer.out, 0.0);
    for (int r = 0; r < layer.out; ++r) {
        double acc = layer.bias[r];
        const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
        for (int c = 0; c < layer.in; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

inline void relu(const std::vector<double>& pre, std::vector<double>& act) {
    act.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double max_logit = logits[0];
    for (double z : logits)
        if (z > max_logit) max_logit = z;
    std::vector<double> probs(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

}  // namespace detail

inline ForwardTrace forward(const NetworkParameters& net, std::span<const double> input) {
    if (static_cast<int>(input.size()) != net.input_width())
        throw std::invalid_argument("forward: input width mismatch");
    ForwardTrace t;
    t.input.assign(input.begin(), input.end());
    detail::affine(net.layers[0], t.input, t.pre1);
    detail::relu(t.pre1, t.act1);
    detail::affine(net.layers[1], t.act1, t.pre2);
    detail::relu(t.pre2, t.act2);
    detail::affine(net.layers[2], t.act2, t.out);
    if (net.head == HeadKind::probability) t.probs = detail::softmax(t.out);
    return t;
}

inline std::vector<double> forward_actor(const NetworkParameters& net,
                                         std::span<const double> input) {
    if (net.head != HeadKind::probability)
        throw std::invalid_argument("forward_actor: network has no probability head");
    return forward(net, input).probs;
}

inline double forward_critic(const NetworkParameters& net, std::span<const double> input) {
    if (net.head != HeadKind::scalar)
        throw std::invalid_argument("forward_critic: network has no scalar head");
    return forward(net, input).out[0];
}

// Reverse pass from a gradient on the pre-head output. Softmax/log-prob
// upstreams are produced by the helpers below.
inline GradientSet backward(const NetworkParameters& net, const ForwardTrace& trace,
                            std::span<const double> out_gradient) {
    if (static_cast<int>(out_gradient.size()) != net.output_width())
        throw std::invalid_argument("backward: output gradient width mismatch");
    GradientSet grads = zeros_like(net);

    std::vector<double> delta(out_gradient.begin(), out_gradient.end());
    const std::vector<double>* acts[3] = {&trace.input, &trace.act1, &trace.act2};
    const std::vector<double>* pres[2] = {&trace.pre1, &trace.pre2};

    for (int l = 2; l >= 0; --l) {
        const Layer& layer = net.layers[l];
        Layer& g = grads[l];
        const std::vector<double>& x = *acts[l];
        for (int r = 0; r < layer.out; ++r) {
            g.bias[r] = delta[r];
            double* grow = g.weights.data() + static_cast<std::size_t>(r) * layer.in;
            for (int c = 0; c < layer.in; ++c) grow[c] = delta[r] * x[c];
        }
        if (l == 0) break;
        std::vector<double> prev(layer.in, 0.0);
        for (int r = 0; r < layer.out; ++r) {
            const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
            for (int c = 0; c < layer.in; ++c) prev[c] += row[c] * delta[r];
        }
        const std::vector<double>& pre = *pres[l - 1];
        for (int c = 0; c < layer.in; ++c)
            if (pre[c] <= 0.0) prev[c] = 0.0;
        delta = std::move(prev);
    }
    return grads;
}

// d log mu_a / d logits = e_a - mu
inline GradientSet grad_log_prob(const NetworkParameters& net, std::span<const double> input,
                                 int action) {
    if (action < 0 || action >= net.output_width())
        throw std::out_of_range("grad_log_prob: action index out of range");
    ForwardTrace trace = forward(net, input);
    std::vector<double> upstream(trace.probs.size());
    for (std::size_t i = 0; i < trace.probs.size(); ++i)
        upstream[i] = (static_cast<int>(i) == action ? 1.0 : 0.0) - trace.probs[i];
    return backward(net, trace, upstream);
}

// d H(mu) / d logits = -mu .* (log mu + H(mu))
inline GradientSet grad_policy_entropy(const NetworkParameters& net,
                                       std::span<const double> input) {
    ForwardTrace trace = forward(net, input);
    double h = 0.0;
    for (double p : trace.probs)
        if (p > 0.0) h -= p * std::log(p);
    std::vector<double> upstream(trace.probs.size());
    for (std::size_t i = 0; i < trace.probs.size(); ++i)
        upstream[i] = -trace.probs[i] * (std::log(trace.probs[i]) + h);
    return backward(net, trace, upstream);
}

// --- Optimizers --------------------------------------------------------------

enum class StepDirection { ascend, descend };

struct OptimizerState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step_count = 0;
    GradientSet first_moment;
    GradientSet second_moment;
};

inline OptimizerState make_optimizer(const NetworkParameters& net, double learning_rate) {
    OptimizerState s;
    s.learning_rate = learning_rate;
    s.first_moment = zeros_like(net);
    s.second_moment = zeros_like(net);
    return s;
}

namespace detail {

inline void check_finite(const GradientSet& grads) {
    for (const Layer& l : grads) {
        for (double w : l.weights)
            if (!std::isfinite(w)) throw std::runtime_error("optimizer: non-finite gradient");
        for (double b : l.bias)
            if (!std::isfinite(b)) throw std::runtime_error("optimizer: non-finite gradient");
    }
}

}  // namespace detail

inline void adam_step(NetworkParameters& net, const GradientSet& grads, OptimizerState& state,
                      StepDirection direction) {
    detail::check_finite(grads);
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    const double sign = direction == StepDirection::ascend ? 1.0 : -1.0;

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto update = [&](std::vector<double>& params, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
            for (std::size_t k = 0; k < params.size(); ++k) {
                m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
                v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
                const double m_hat = m[k] / bc1;
                const double v_hat = v[k] / bc2;
                params[k] += sign * state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
                if (!std::isfinite(params[k]))
                    throw std::runtime_error("optimizer: parameter became non-finite");
            }
        };
        update(net.layers[l].weights, grads[l].weights, state.first_moment[l].weights,
               state.second_moment[l].weights);
        update(net.layers[l].bias, grads[l].bias, state.first_moment[l].bias,
               state.second_moment[l].bias);
    }
}

// Plain gradient step, used as a test hook and as the sgd optimizer option.
inline void sgd_step(NetworkParameters& net, const GradientSet& grads, double learning_rate,
                     StepDirection direction) {
    detail::check_finite(grads);
    const double sign = direction == StepDirection::ascend ? 1.0 : -1.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (std::size_t k = 0; k < net.layers[l].weights.size(); ++k)
            net.layers[l].weights[k] += sign * learning_rate * grads[l].weights[k];
        for (std::size_t k = 0; k < net.layers[l].bias.size(); ++k)
            net.layers[l].bias[k] += sign * learning_rate * grads[l].bias[k];
    }
}

inline bool parameters_finite(const NetworkParameters& net) {
    for (const Layer& l : net.layers) {
        for (double w : l.weights)
            if (!std::isfinite(w)) return false;
        for (double b : l.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

}  // namespace anodet
