#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "anodet/mlp.hpp"
#include "anodet/rng.hpp"

using namespace anodet;

namespace {

std::vector<double> random_input(int n, RandomStream& rng) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform();
    return x;
}

// Central finite difference of a scalar function of one parameter.
template <typename F>
double central_difference(double& param, F&& f, double h = 1e-5) {
    const double saved = param;
    param = saved + h;
    const double plus = f();
    param = saved - h;
    const double minus = f();
    param = saved;
    return (plus - minus) / (2.0 * h);
}

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-10) return 0.0;  // both effectively zero
    return std::abs(a - b) / scale;
}

}  // namespace

TEST(ForwardActor, ZeroParametersGiveUniform) {
    RandomStream rng(1);
    NetworkParameters net = make_network(5, 8, 5, HeadKind::probability, rng);
    for (Layer& l : net.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    const auto probs = forward_actor(net, std::vector<double>{0.1, 0.9, 0.5, 0.5, 0.5});
    for (double p : probs) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(ForwardActor, OutputIsProbabilityVector) {
    RandomStream rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        NetworkParameters net = make_network(5, 16, 5, HeadKind::probability, rng);
        const auto probs = forward_actor(net, random_input(5, rng));
        double total = 0.0;
        for (double p : probs) {
            EXPECT_GT(p, 0.0);
            total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(ForwardActor, LogitShiftInvariance) {
    RandomStream rng(3);
    NetworkParameters net = make_network(4, 8, 4, HeadKind::probability, rng);
    const auto input = random_input(4, rng);
    const auto before = forward_actor(net, input);
    for (double& b : net.layers[2].bias) b += 3.7;  // constant shift of every logit
    const auto after = forward_actor(net, input);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
}

TEST(ForwardActor, ShapeMismatchThrows) {
    RandomStream rng(4);
    NetworkParameters net = make_network(5, 8, 5, HeadKind::probability, rng);
    EXPECT_THROW(forward_actor(net, std::vector<double>{0.5, 0.5}), std::invalid_argument);
}

TEST(ForwardCritic, ZeroWeightsGiveZero) {
    RandomStream rng(5);
    NetworkParameters net = make_network(11, 8, 1, HeadKind::scalar, rng);
    for (Layer& l : net.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    EXPECT_EQ(forward_critic(net, random_input(11, rng)), 0.0);
}

TEST(ForwardCritic, Deterministic) {
    RandomStream rng(6);
    NetworkParameters net = make_network(7, 16, 1, HeadKind::scalar, rng);
    const auto input = random_input(7, rng);
    EXPECT_EQ(forward_critic(net, input), forward_critic(net, input));
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    RandomStream rng(7);
    NetworkParameters net = make_network(4, 8, 3, HeadKind::probability, rng);
    const auto input = random_input(4, rng);
    const ForwardTrace trace = forward(net, input);
    const GradientSet grads = backward(net, trace, std::vector<double>(3, 0.0));
    for (const Layer& l : grads) {
        for (double w : l.weights) EXPECT_EQ(w, 0.0);
        for (double b : l.bias) EXPECT_EQ(b, 0.0);
    }
}

TEST(Backward, FinalLayerClosedForm) {
    // last-layer gradient is the outer product of upstream and its input
    RandomStream rng(8);
    NetworkParameters net = make_network(4, 6, 3, HeadKind::scalar, rng);
    const auto input = random_input(4, rng);
    const ForwardTrace trace = forward(net, input);
    std::vector<double> upstream{0.3, -1.1, 0.7};
    const GradientSet grads = backward(net, trace, upstream);
    for (int r = 0; r < 3; ++r) {
        EXPECT_DOUBLE_EQ(grads[2].bias[r], upstream[r]);
        for (int c = 0; c < 6; ++c)
            EXPECT_DOUBLE_EQ(grads[2].weights[r * 6 + c], upstream[r] * trace.act2[c]);
    }
}

TEST(Backward, IdentityHiddenLayersReduceToLinearCase) {
    // hidden stages wired as identities over positive inputs: the first-layer
    // weight gradient must be upstream (x) input
    RandomStream rng(9);
    NetworkParameters net = make_network(3, 3, 2, HeadKind::scalar, rng);
    for (int l : {0, 1}) {
        std::fill(net.layers[l].weights.begin(), net.layers[l].weights.end(), 0.0);
        for (int r = 0; r < 3; ++r) net.layers[l].weights[r * 3 + r] = 1.0;
        std::fill(net.layers[l].bias.begin(), net.layers[l].bias.end(), 0.0);
    }
    const std::vector<double> input{0.4, 0.9, 0.2};  // positive, ReLU passes through
    const ForwardTrace trace = forward(net, input);
    const std::vector<double> upstream{1.5, -0.5};
    const GradientSet grads = backward(net, trace, upstream);
    // delta reaching layer 0 is W2^T W3^T upstream with identity hidden weights
    std::vector<double> delta0(3, 0.0);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 2; ++r) delta0[c] += net.layers[2].weights[r * 3 + c] * upstream[r];
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            EXPECT_NEAR(grads[0].weights[r * 3 + c], delta0[r] * input[c], 1e-12);
}

TEST(GradientCheck, CriticMatchesFiniteDifferences) {
    RandomStream rng(10);
    int instances = 0;
    while (instances < 100) {
        const int in = 3 + static_cast<int>(rng.uniform_index(6));
        const int hidden = 4 + static_cast<int>(rng.uniform_index(5));
        NetworkParameters net = make_network(in, hidden, 1, HeadKind::scalar, rng);
        const auto input = random_input(in, rng);
        const ForwardTrace trace = forward(net, input);
        const GradientSet grads = backward(net, trace, std::vector<double>{1.0});

        auto value = [&] { return forward_critic(net, input); };
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            auto check = [&](std::vector<double>& params, const std::vector<double>& analytic) {
                const std::size_t stride = std::max<std::size_t>(1, params.size() / 7);
                for (std::size_t k = 0; k < params.size(); k += stride) {
                    const double numeric = central_difference(params[k], value);
                    ASSERT_LT(relative_error(analytic[k], numeric), 1e-4)
                        << "layer " << l << " param " << k;
                }
            };
            check(net.layers[l].weights, grads[l].weights);
            check(net.layers[l].bias, grads[l].bias);
        }
        ++instances;
    }
}

TEST(GradientCheck, ActorLogProbMatchesFiniteDifferences) {
    RandomStream rng(11);
    int instances = 0;
    while (instances < 100) {
        const int n = 2 + static_cast<int>(rng.uniform_index(5));
        const int hidden = 4 + static_cast<int>(rng.uniform_index(5));
        NetworkParameters net = make_network(n, hidden, n, HeadKind::probability, rng);
        const auto input = random_input(n, rng);
        const int action = static_cast<int>(rng.uniform_index(n));
        const GradientSet grads = grad_log_prob(net, input, action);

        auto value = [&] { return std::log(forward_actor(net, input)[action]); };
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            auto check = [&](std::vector<double>& params, const std::vector<double>& analytic) {
                const std::size_t stride = std::max<std::size_t>(1, params.size() / 7);
                for (std::size_t k = 0; k < params.size(); k += stride) {
                    const double numeric = central_difference(params[k], value);
                    ASSERT_LT(relative_error(analytic[k], numeric), 1e-4)
                        << "layer " << l << " param " << k;
                }
            };
            check(net.layers[l].weights, grads[l].weights);
            check(net.layers[l].bias, grads[l].bias);
        }
        ++instances;
    }
}

TEST(GradientCheck, PolicyEntropyMatchesFiniteDifferences) {
    RandomStream rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3;
        NetworkParameters net = make_network(n, 6, n, HeadKind::probability, rng);
        const auto input = random_input(n, rng);
        const GradientSet grads = grad_policy_entropy(net, input);
        auto value = [&] {
            const auto probs = forward_actor(net, input);
            double h = 0.0;
            for (double p : probs) h -= p * std::log(p);
            return h;
        };
        for (std::size_t k = 0; k < net.layers[1].weights.size(); k += 5) {
            const double numeric = central_difference(net.layers[1].weights[k], value);
            ASSERT_LT(relative_error(grads[1].weights[k], numeric), 1e-4);
        }
    }
}

TEST(GradLogProb, SingleActionGivesZeroGradient) {
    RandomStream rng(13);
    NetworkParameters net = make_network(1, 8, 1, HeadKind::probability, rng);
    const GradientSet grads = grad_log_prob(net, std::vector<double>{0.7}, 0);
    for (const Layer& l : grads) {
        for (double w : l.weights) EXPECT_NEAR(w, 0.0, 1e-15);
        for (double b : l.bias) EXPECT_NEAR(b, 0.0, 1e-15);
    }
}

TEST(GradLogProb, ScoreFunctionExpectationIsZero) {
    RandomStream rng(14);
    const int n = 4;
    NetworkParameters net = make_network(n, 8, n, HeadKind::probability, rng);
    const auto input = random_input(n, rng);

    const int samples = 100000;
    GradientSet mean = zeros_like(net);
    GradientSet mean_sq = zeros_like(net);
    for (int m = 0; m < samples; ++m) {
        const int action = static_cast<int>(rng.discrete(forward_actor(net, input)));
        const GradientSet g = grad_log_prob(net, input, action);
        for (std::size_t l = 0; l < g.size(); ++l) {
            for (std::size_t k = 0; k < g[l].weights.size(); ++k) {
                mean[l].weights[k] += g[l].weights[k];
                mean_sq[l].weights[k] += g[l].weights[k] * g[l].weights[k];
            }
            for (std::size_t k = 0; k < g[l].bias.size(); ++k) {
                mean[l].bias[k] += g[l].bias[k];
                mean_sq[l].bias[k] += g[l].bias[k] * g[l].bias[k];
            }
        }
    }
    // every coordinate mean within 5 standard errors of zero
    auto check = [&](double sum, double sum_sq) {
        const double avg = sum / samples;
        const double var = std::max(sum_sq / samples - avg * avg, 0.0);
        const double stderr_avg = std::sqrt(var / samples);
        EXPECT_LE(std::abs(avg), 5.0 * stderr_avg + 1e-12);
    };
    for (std::size_t l = 0; l < mean.size(); ++l) {
        for (std::size_t k = 0; k < mean[l].weights.size(); ++k)
            check(mean[l].weights[k], mean_sq[l].weights[k]);
        for (std::size_t k = 0; k < mean[l].bias.size(); ++k)
            check(mean[l].bias[k], mean_sq[l].bias[k]);
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    RandomStream rng(15);
    NetworkParameters net = make_network(3, 4, 2, HeadKind::scalar, rng);
    const NetworkParameters before = net;
    OptimizerState opt = make_optimizer(net, 1e-2);
    adam_step(net, zeros_like(net), opt, StepDirection::descend);
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        for (std::size_t k = 0; k < net.layers[l].weights.size(); ++k)
            EXPECT_EQ(net.layers[l].weights[k], before.layers[l].weights[k]);
    EXPECT_EQ(opt.step_count, 1);
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
    RandomStream rng(16);
    NetworkParameters net = make_network(2, 3, 1, HeadKind::scalar, rng);
    const NetworkParameters before = net;
    OptimizerState opt = make_optimizer(net, 1e-3);
    GradientSet grads = zeros_like(net);
    for (Layer& l : grads) {
        std::fill(l.weights.begin(), l.weights.end(), 0.37);
        std::fill(l.bias.begin(), l.bias.end(), -2.4);
    }
    adam_step(net, grads, opt, StepDirection::descend);
    // bias-corrected first step: lr * g / (|g| + eps) = lr * sign(g), so each
    // parameter moves by ~lr against the gradient
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (std::size_t k = 0; k < net.layers[l].weights.size(); ++k) {
            const double step = net.layers[l].weights[k] - before.layers[l].weights[k];
            EXPECT_NEAR(step, -1e-3, 1e-7);
        }
        for (std::size_t k = 0; k < net.layers[l].bias.size(); ++k) {
            const double step = net.layers[l].bias[k] - before.layers[l].bias[k];
            EXPECT_NEAR(step, 1e-3, 1e-7);
        }
    }
}

TEST(Adam, DescendsConvexQuadratic) {
    // f(w) = w^2 on a single chosen weight, everything else frozen
    RandomStream rng(17);
    NetworkParameters net = make_network(2, 3, 1, HeadKind::scalar, rng);
    net.layers[0].weights[0] = 1.0;
    OptimizerState opt = make_optimizer(net, 5e-3);
    for (int step = 0; step < 500; ++step) {
        GradientSet grads = zeros_like(net);
        grads[0].weights[0] = 2.0 * net.layers[0].weights[0];
        adam_step(net, grads, opt, StepDirection::descend);
    }
    EXPECT_LT(std::abs(net.layers[0].weights[0]), 0.05);
}

TEST(Adam, AscendNegatesDescent) {
    RandomStream rng(18);
    NetworkParameters up = make_network(2, 3, 1, HeadKind::scalar, rng);
    NetworkParameters down = up;
    OptimizerState opt_up = make_optimizer(up, 1e-3);
    OptimizerState opt_down = make_optimizer(down, 1e-3);
    GradientSet grads = zeros_like(up);
    grads[1].weights[2] = 0.8;
    adam_step(up, grads, opt_up, StepDirection::ascend);
    adam_step(down, grads, opt_down, StepDirection::descend);
    EXPECT_GT(up.layers[1].weights[2], down.layers[1].weights[2]);
}

TEST(Adam, NonFiniteGradientThrows) {
    RandomStream rng(19);
    NetworkParameters net = make_network(2, 3, 1, HeadKind::scalar, rng);
    OptimizerState opt = make_optimizer(net, 1e-3);
    GradientSet grads = zeros_like(net);
    grads[0].weights[0] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(adam_step(net, grads, opt, StepDirection::descend), std::runtime_error);
}

TEST(Sgd, StepIsExactlyScaledGradient) {
    RandomStream rng(20);
    NetworkParameters net = make_network(3, 4, 2, HeadKind::scalar, rng);
    const NetworkParameters before = net;
    GradientSet grads = zeros_like(net);
    for (Layer& l : grads)
        for (double& w : l.weights) w = rng.uniform() - 0.5;
    sgd_step(net, grads, 0.01, StepDirection::ascend);
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        for (std::size_t k = 0; k < net.layers[l].weights.size(); ++k) {
            const double expected = before.layers[l].weights[k] + 0.01 * grads[l].weights[k];
            EXPECT_EQ(net.layers[l].weights[k], expected);
        }
}

TEST(Initialization, SeededAndBitwiseReproducible) {
    RandomStream a(42), b(42);
    const NetworkParameters na = make_network(5, 16, 5, HeadKind::probability, a);
    const NetworkParameters nb = make_network(5, 16, 5, HeadKind::probability, b);
    for (std::size_t l = 0; l < na.layers.size(); ++l)
        EXPECT_EQ(std::memcmp(na.layers[l].weights.data(), nb.layers[l].weights.data(),
                              na.layers[l].weights.size() * sizeof(double)), 0);
    // scaled by inverse square root of fan-in, biases zero
    const double bound0 = 1.0 / std::sqrt(5.0);
    for (double w : na.layers[0].weights) EXPECT_LE(std::abs(w), bound0);
    for (double bias : na.layers[0].bias) EXPECT_EQ(bias, 0.0);
}
