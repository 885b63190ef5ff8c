#include "dfprune/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dfprune/errors.hpp"

namespace dfprune {

void TrainConfig::validate() const {
    if (hidden_units == 0) throw PreconditionError("TrainConfig: hidden_units must be positive");
    if (activation == Activation::Identity) throw PreconditionError("TrainConfig: hidden activation must be relu or sigmoid");
    if (!(learning_rate > 0.0)) throw PreconditionError("TrainConfig: learning_rate must be positive");
    if (batch_size == 0) throw PreconditionError("TrainConfig: batch_size must be positive");
    if (!(weight_decay >= 0.0)) throw PreconditionError("TrainConfig: weight_decay must be >= 0");
}

Network init_network(std::size_t input_dim, std::size_t num_classes, const TrainConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    auto make = [&](std::size_t n_in, std::size_t n_out, Activation act) {
        const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        FcLayer l{Matrix(n_out, n_in), std::vector<double>(n_out, 0.0), act};
        for (double& w : l.weights.data()) w = u(rng);
        return l;
    };
    std::vector<FcLayer> layers;
    layers.push_back(make(input_dim, cfg.hidden_units, cfg.activation));
    layers.push_back(make(cfg.hidden_units, num_classes, Activation::Identity));
    return Network(input_dim, std::move(layers));
}

void apply_sgd_update(FcLayer& layer, const Matrix& grad_w, std::span<const double> grad_b, double learning_rate,
                      double weight_decay) {
    if (grad_w.rows() != layer.n_out() || grad_w.cols() != layer.n_in() || grad_b.size() != layer.n_out()) {
        throw DimensionError("apply_sgd_update: gradient shape differs from layer");
    }
    auto w = layer.weights.data();
    auto g = grad_w.data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= learning_rate * (g[k] + weight_decay * w[k]);
    for (std::size_t k = 0; k < grad_b.size(); ++k) layer.bias[k] -= learning_rate * grad_b[k];
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    return best;
}

namespace {

double derivative(Activation act, double pre, double post) {
    switch (act) {
        case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return post * (1.0 - post);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

Network train(const Dataset& ds, const TrainConfig& cfg) {
    ds.validate();
    cfg.validate();
    const Network init = init_network(ds.dim(), static_cast<std::size_t>(ds.num_classes), cfg);
    auto train_idx = ds.indices(Split::Train);
    if (train_idx.empty()) throw PreconditionError("train: no training samples");
    if (cfg.epochs == 0) return init;

    std::vector<FcLayer> layers = init.layers();
    const std::size_t depth = layers.size();
    std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);

    std::vector<Matrix> grad_w(depth);
    std::vector<std::vector<double>> grad_b(depth);
    std::vector<std::vector<double>> pre(depth), post(depth + 1), delta(depth);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, train_idx.size());
            for (std::size_t l = 0; l < depth; ++l) {
                grad_w[l] = Matrix(layers[l].n_out(), layers[l].n_in());
                grad_b[l].assign(layers[l].n_out(), 0.0);
            }
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t k = train_idx[s];
                auto x = ds.features.row(k);
                post[0].assign(x.begin(), x.end());
                for (std::size_t l = 0; l < depth; ++l) {
                    const FcLayer& L = layers[l];
                    pre[l].resize(L.n_out());
                    post[l + 1].resize(L.n_out());
                    for (std::size_t r = 0; r < L.n_out(); ++r) {
                        pre[l][r] = dot(L.weights.row(r), post[l]) + L.bias[r];
                        post[l + 1][r] = activate(L.activation, pre[l][r]);
                    }
                }
                // softmax cross-entropy on the logits
                const auto& logits = post[depth];
                const double mx = *std::max_element(logits.begin(), logits.end());
                double z = 0.0;
                for (double v : logits) z += std::exp(v - mx);
                const auto y = static_cast<std::size_t>(ds.labels[k]);
                epoch_loss += -(logits[y] - mx - std::log(z));

                delta[depth - 1].resize(logits.size());
                for (std::size_t c = 0; c < logits.size(); ++c) {
                    delta[depth - 1][c] = std::exp(logits[c] - mx) / z - (c == y ? 1.0 : 0.0);
                }
                for (std::size_t l = depth; l-- > 0;) {
                    const FcLayer& L = layers[l];
                    if (l + 1 < depth) {
                        delta[l].assign(L.n_out(), 0.0);
                        const FcLayer& N = layers[l + 1];
                        for (std::size_t r = 0; r < N.n_out(); ++r) {
                            const double d = delta[l + 1][r];
                            for (std::size_t c = 0; c < N.n_in(); ++c) delta[l][c] += N.weights(r, c) * d;
                        }
                        for (std::size_t c = 0; c < L.n_out(); ++c) {
                            delta[l][c] *= derivative(L.activation, pre[l][c], post[l + 1][c]);
                        }
                    }
                    for (std::size_t r = 0; r < L.n_out(); ++r) {
                        const double d = delta[l][r];
                        auto g = grad_w[l].row(r);
                        for (std::size_t c = 0; c < L.n_in(); ++c) g[c] += d * post[l][c];
                        grad_b[l][r] += d;
                    }
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t l = 0; l < depth; ++l) {
                for (double& g : grad_w[l].data()) g *= inv;
                for (double& g : grad_b[l]) g *= inv;
                apply_sgd_update(layers[l], grad_w[l], grad_b[l], cfg.learning_rate, cfg.weight_decay);
            }
        }
        if (!std::isfinite(epoch_loss)) {
            throw TrainingError("train: loss became non-finite in epoch " + std::to_string(epoch + 1) +
                                "; lower the learning rate");
        }
    }
    return Network(init.input_dim(), std::move(layers));
}

Evaluation evaluate(const Network& net, const Dataset& ds, Split split) {
    if (ds.dim() != net.input_dim()) {
        throw DimensionError("evaluate: dataset has " + std::to_string(ds.dim()) + " features, model expects " +
                             std::to_string(net.input_dim()));
    }
    if (net.output_dim() < static_cast<std::size_t>(ds.num_classes)) {
        throw DimensionError("evaluate: dataset has " + std::to_string(ds.num_classes) + " classes, model has " +
                             std::to_string(net.output_dim()) + " outputs");
    }
    const auto idx = ds.indices(split);
    if (idx.empty()) throw PreconditionError("evaluate: split has no samples");
    std::size_t correct = 0;
    for (std::size_t k : idx) {
        const auto z = forward(net, ds.features.row(k));
        if (static_cast<int>(argmax(z)) == ds.labels[k]) ++correct;
    }
    Evaluation e;
    e.samples = idx.size();
    e.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(idx.size());
    e.error = 100.0 - e.accuracy;
    return e;
}

std::vector<CurvePoint> error_curve(const Network& net, std::size_t layer_index, const Dataset& ds,
                                    const PrunePolicy& policy, const SimilarityConfig& cfg, std::size_t every,
                                    Split split) {
    detail::check_hidden_layer(net, layer_index);
    if (every == 0) throw PreconditionError("error_curve: evaluation stride must be positive");
    const std::size_t n = net.layer(layer_index).n_out();
    std::vector<CurvePoint> curve{{0, evaluate(net, ds, split).error}};
    if (n < 2) return curve;
    const std::size_t last = n - 1;
    prune_layer(net, layer_index, last, policy, cfg, [&](const PruneStep& step, const Network& current) {
        if (step.step_number % every == 0 || step.step_number == last) {
            curve.push_back({step.step_number, evaluate(current, ds, split).error});
        }
    });
    return curve;
}

}  // namespace dfprune
