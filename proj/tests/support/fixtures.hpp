#pragma once

// Shared test fixtures and independent oracles. Nothing here calls into the
// code path it is used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dfprune/dataset.hpp"
#include "dfprune/network.hpp"
#include "dfprune/trainer.hpp"

namespace dfprune::testing {

inline FcLayer random_layer(std::mt19937_64& rng, std::size_t n_in, std::size_t n_out, Activation act,
                            double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    FcLayer l{Matrix(n_out, n_in), std::vector<double>(n_out), act};
    for (double& w : l.weights.data()) w = g(rng);
    for (double& b : l.bias) b = g(rng);
    return l;
}

// widths = {input, hidden..., output}; the output layer is Identity.
inline Network random_network(std::uint64_t seed, const std::vector<std::size_t>& widths, Activation hidden,
                              double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::vector<FcLayer> layers;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const bool last = k + 2 == widths.size();
        layers.push_back(random_layer(rng, widths[k], widths[k + 1], last ? Activation::Identity : hidden, scale));
    }
    return Network(widths.front(), std::move(layers));
}

inline std::vector<double> random_input(std::mt19937_64& rng, std::size_t d, double range) {
    std::uniform_real_distribution<double> u(-range, range);
    std::vector<double> x(d);
    for (double& v : x) v = u(rng);
    return x;
}

// Per-neuron loop forward pass, written without Matrix helpers.
inline std::vector<double> oracle_forward(const Network& net, const std::vector<double>& x) {
    std::vector<double> cur = x;
    for (const FcLayer& l : net.layers()) {
        std::vector<double> nxt;
        for (std::size_t r = 0; r < l.n_out(); ++r) {
            double pre = l.bias[r];
            for (std::size_t c = 0; c < l.n_in(); ++c) pre += l.weights.data()[r * l.n_in() + c] * cur[c];
            double h = pre;
            if (l.activation == Activation::ReLU) h = pre < 0.0 ? 0.0 : pre;
            if (l.activation == Activation::Sigmoid) h = 1.0 / (1.0 + std::exp(-pre));
            nxt.push_back(h);
        }
        cur = nxt;
    }
    return cur;
}

// Pairwise saliency written straight from the definitions:
// s(i,j) = mean_k a_kj^2 * sim(i,j)^2, with sim either the raw difference of
// [W', b] or the normalized weights/bias heuristic.
inline double oracle_saliency(const FcLayer& layer, const FcLayer& next, std::size_t i, std::size_t j, bool heuristic,
                              double guard = 1e-12) {
    const std::size_t d = layer.n_in();
    double a2 = 0.0;
    for (std::size_t k = 0; k < next.n_out(); ++k) a2 += next.weights(k, j) * next.weights(k, j);
    a2 /= static_cast<double>(next.n_out());

    double sim = 0.0;
    if (!heuristic) {
        double s = (layer.bias[i] - layer.bias[j]) * (layer.bias[i] - layer.bias[j]);
        for (std::size_t c = 0; c < d; ++c) s += std::pow(layer.weights(i, c) - layer.weights(j, c), 2);
        sim = std::sqrt(s);
    } else {
        double ni = 0.0, nj = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            ni += layer.weights(i, c) * layer.weights(i, c);
            nj += layer.weights(j, c) * layer.weights(j, c);
        }
        ni = std::sqrt(ni);
        nj = std::sqrt(nj);
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            num += std::pow(layer.weights(i, c) / ni - layer.weights(j, c) / nj, 2);
            den += std::pow(layer.weights(i, c) + layer.weights(j, c), 2);
        }
        const double bi = layer.bias[i], bj = layer.bias[j];
        sim = std::sqrt(num) / std::max(std::sqrt(den), guard) + std::abs(bi - bj) / std::max(std::abs(bi + bj), guard);
    }
    return a2 * sim * sim;
}

inline double relative_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

// 400 saliencies packed around 1.2 plus 100 spread over [2, 6].
inline std::vector<double> saliency_mixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> core(1.2, 0.03);
    std::uniform_real_distribution<double> tail(2.0, 6.0);
    std::vector<double> v;
    for (int k = 0; k < 400; ++k) v.push_back(core(rng));
    for (int k = 0; k < 100; ++k) v.push_back(tail(rng));
    return v;
}

// The 20-hidden-unit sigmoid fixture on spam-shaped data.
inline constexpr std::uint64_t kFixtureDataSeed = 2024;

inline TrainConfig fixture_train_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.hidden_units = 20;
    cfg.activation = Activation::Sigmoid;
    cfg.learning_rate = 0.1;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.seed = seed;
    return cfg;
}

}  // namespace dfprune::testing
