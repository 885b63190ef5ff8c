#include "dfprune/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dfprune/errors.hpp"

namespace dfprune {

namespace {

void add_column(FcLayer& next, std::size_t into, std::size_t from) {
    for (std::size_t k = 0; k < next.n_out(); ++k) next.weights(k, into) += next.weights(k, from);
}

// Merge step on a working copy. Ids in the returned step are matrix ids.
PruneStep merge_step(std::vector<FcLayer>& layers, std::size_t layer_index, SaliencyMatrix& m, bool surgery) {
    const auto e = m.argmin();
    const std::size_t pos_kept = m.position_of(e.kept);
    const std::size_t pos_removed = m.position_of(e.removed);
    if (surgery) add_column(layers[layer_index + 1], pos_kept, pos_removed);
    detail::erase_neuron(layers, layer_index, pos_removed);
    m.remove(e.removed);
    if (surgery) m.refresh_column(e.kept, layers[layer_index + 1]);

    PruneStep step;
    step.kept = e.kept;
    step.removed = e.removed;
    step.saliency = e.saliency;
    step.step_number = m.original_size() - m.live_count();
    return step;
}

void check_matrix_matches(const Network& net, std::size_t layer_index, const SaliencyMatrix& m) {
    if (m.layer_index() != layer_index) {
        throw PreconditionError("prune_one: saliency matrix describes layer " + std::to_string(m.layer_index()) +
                                ", not " + std::to_string(layer_index));
    }
    if (m.live_count() != net.layer(layer_index).n_out()) {
        throw DimensionError("prune_one: saliency matrix has " + std::to_string(m.live_count()) +
                             " live neurons but the layer has " + std::to_string(net.layer(layer_index).n_out()));
    }
}

std::size_t naive_pick(const std::vector<FcLayer>& layers, std::size_t layer_index, double& score_out) {
    const FcLayer& l = layers[layer_index];
    const FcLayer& next = layers[layer_index + 1];
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < l.n_out(); ++j) {
        double out_sq = 0.0;
        for (std::size_t k = 0; k < next.n_out(); ++k) out_sq += next.weights(k, j) * next.weights(k, j);
        const double score = norm(l.weights.row(j)) * std::sqrt(out_sq);
        if (j == 0 || score < best_score) {
            best = j;
            best_score = score;
        }
    }
    score_out = best_score;
    return best;
}

}  // namespace

std::vector<double> PruneTrace::saliencies() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.saliency);
    return out;
}

std::string_view to_string(PolicyKind kind) noexcept {
    switch (kind) {
        case PolicyKind::SaliencySurgery: return "saliency";
        case PolicyKind::SaliencyNoSurgery: return "nosurgery";
        case PolicyKind::NaiveMagnitude: return "naive";
        case PolicyKind::Random: return "random";
    }
    return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) noexcept {
    for (auto k : {PolicyKind::SaliencySurgery, PolicyKind::SaliencyNoSurgery, PolicyKind::NaiveMagnitude,
                   PolicyKind::Random}) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

PrunePolicy PrunePolicy::make(PolicyKind kind, std::uint64_t seed) {
    return kind == PolicyKind::Random ? random(seed) : PrunePolicy(kind, {});
}

PruneOneResult prune_one(const Network& net, std::size_t layer_index, const SaliencyMatrix& matrix) {
    detail::check_hidden_layer(net, layer_index);
    check_matrix_matches(net, layer_index, matrix);
    if (matrix.live_count() < 2) throw PreconditionError("prune_one: layer has a single neuron left");

    std::vector<FcLayer> layers = net.layers();
    SaliencyMatrix m = matrix;
    PruneStep step = merge_step(layers, layer_index, m, true);
    return {Network(net.input_dim(), std::move(layers)), std::move(m), step};
}

PruneLayerResult prune_layer(const Network& net, std::size_t layer_index, std::size_t count,
                             const PrunePolicy& policy, const SimilarityConfig& cfg, const PruneObserver& observer) {
    detail::check_hidden_layer(net, layer_index);
    const std::size_t n = net.layer(layer_index).n_out();
    if (count < 1 || count + 1 > n) {
        throw PreconditionError("prune_layer: count " + std::to_string(count) + " outside [1, " +
                                std::to_string(n == 0 ? 0 : n - 1) + "] for layer " + std::to_string(layer_index));
    }
    cfg.validate();

    PruneTrace trace;
    trace.layer_index = layer_index;
    trace.original_size = n;

    std::vector<FcLayer> layers = net.layers();
    std::vector<std::size_t> ids(n);
    for (std::size_t k = 0; k < n; ++k) ids[k] = k;

    auto record = [&](PruneStep step) {
        step.step_number = trace.steps.size() + 1;
        trace.steps.push_back(step);
        if (observer) observer(trace.steps.back(), Network(net.input_dim(), layers));
    };
    auto drop_id = [&](std::size_t pos) {
        const std::size_t id = ids[pos];
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(pos));
        return id;
    };

    switch (policy.kind()) {
        case PolicyKind::SaliencySurgery:
        case PolicyKind::SaliencyNoSurgery: {
            std::vector<std::size_t> constant_neurons;
            if (layers[layer_index].activation == Activation::ReLU) {
                auto rescaled = rescale_relu_layer(net, layer_index);
                layers = rescaled.network.layers();
                constant_neurons = std::move(rescaled.zero_norm_neurons);
            } else {
                for (std::size_t k = 0; k < n; ++k) {
                    if (squared_norm(layers[layer_index].weights.row(k)) == 0.0) constant_neurons.push_back(k);
                }
            }

            // A neuron without incoming weights outputs h(b); its contribution
            // moves into the next layer's bias exactly.
            for (auto it = constant_neurons.rbegin(); it != constant_neurons.rend(); ++it) {
                if (trace.steps.size() == count) break;
                const std::size_t pos = *it;
                FcLayer& l = layers[layer_index];
                FcLayer& next = layers[layer_index + 1];
                const double value = activate(l.activation, l.bias[pos]);
                for (std::size_t k = 0; k < next.n_out(); ++k) next.bias[k] += next.weights(k, pos) * value;
                detail::erase_neuron(layers, layer_index, pos);
                PruneStep step;
                step.removed = drop_id(pos);
                step.saliency = 0.0;
                record(step);
            }
            if (trace.steps.size() == count) break;

            const std::vector<std::size_t> ids_at_build = ids;
            SaliencyMatrix m(layer_index, layers[layer_index], layers[layer_index + 1], cfg);
            const bool surgery = policy.kind() == PolicyKind::SaliencySurgery;
            while (trace.steps.size() < count) {
                PruneStep step = merge_step(layers, layer_index, m, surgery);
                const std::size_t kept = ids_at_build[*step.kept];
                const std::size_t removed = ids_at_build[step.removed];
                ids.erase(std::find(ids.begin(), ids.end(), removed));
                step.kept = kept;
                step.removed = removed;
                record(step);
            }
            break;
        }
        case PolicyKind::NaiveMagnitude: {
            while (trace.steps.size() < count) {
                double score = 0.0;
                const std::size_t pos = naive_pick(layers, layer_index, score);
                detail::erase_neuron(layers, layer_index, pos);
                PruneStep step;
                step.removed = drop_id(pos);
                step.saliency = score;
                record(step);
            }
            break;
        }
        case PolicyKind::Random: {
            std::mt19937_64 rng(*policy.seed());
            while (trace.steps.size() < count) {
                std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
                const std::size_t pos = pick(rng);
                detail::erase_neuron(layers, layer_index, pos);
                PruneStep step;
                step.removed = drop_id(pos);
                record(step);
            }
            break;
        }
    }

    return {Network(net.input_dim(), std::move(layers)), std::move(trace)};
}

PruneNetworkResult prune_network(const Network& net, const std::vector<LayerPlan>& plan, const PrunePolicy& policy,
                                 const SimilarityConfig& cfg) {
    for (std::size_t k = 1; k < plan.size(); ++k) {
        if (plan[k].layer_index <= plan[k - 1].layer_index) {
            throw PreconditionError("prune_network: plan must list layers in strictly ascending order");
        }
    }
    PruneNetworkResult out{net, {}};
    for (const LayerPlan& p : plan) {
        detail::check_hidden_layer(out.network, p.layer_index);
        if (p.count == 0) {
            PruneTrace empty;
            empty.layer_index = p.layer_index;
            empty.original_size = out.network.layer(p.layer_index).n_out();
            out.traces.push_back(std::move(empty));
            continue;
        }
        auto r = prune_layer(out.network, p.layer_index, p.count, policy, cfg);
        out.network = std::move(r.network);
        out.traces.push_back(std::move(r.trace));
    }
    return out;
}

double compression_percent(std::size_t removed_params, std::size_t total_params) {
    if (total_params == 0) throw PreconditionError("compression_percent: total parameter count must be positive");
    if (removed_params > total_params) {
        throw PreconditionError("compression_percent: removed parameters exceed the total");
    }
    return 100.0 * static_cast<double>(removed_params) / static_cast<double>(total_params);
}

std::size_t removed_parameter_count(std::size_t neurons, std::size_t fan_in, std::size_t fan_out) {
    return neurons * (fan_in + 1 + fan_out);
}

}  // namespace dfprune
