#include "dfprune/network.hpp"

#include <cmath>
#include <string>

#include "dfprune/errors.hpp"

namespace dfprune {

double activate(Activation act, double x) noexcept {
    switch (act) {
        case Activation::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Identity: return x;
    }
    return x;
}

std::string_view to_string(Activation act) noexcept {
    switch (act) {
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "unknown";
}

std::optional<Activation> parse_activation(std::string_view name) noexcept {
    if (name == "relu") return Activation::ReLU;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "identity") return Activation::Identity;
    return std::nullopt;
}

WeightSet FcLayer::weight_set(std::size_t neuron) const {
    if (neuron >= n_out()) throw PreconditionError("weight_set: neuron index out of range");
    auto r = weights.row(neuron);
    return {std::vector<double>(r.begin(), r.end()), bias[neuron]};
}

Network::Network(std::size_t input_dim, std::vector<FcLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
    if (input_dim_ == 0) throw DimensionError("Network: input_dim must be positive");
    if (layers_.size() < 2) throw PreconditionError("Network: need at least one hidden and one output layer");
    std::size_t fan_in = input_dim_;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const FcLayer& l = layers_[k];
        const std::string where = "Network: layer " + std::to_string(k);
        if (l.n_out() == 0) throw DimensionError(where + " has no neurons");
        if (l.n_in() != fan_in) {
            throw DimensionError(where + " expects " + std::to_string(l.n_in()) + " inputs, previous layer gives " +
                                 std::to_string(fan_in));
        }
        if (l.bias.size() != l.n_out()) throw DimensionError(where + " bias length differs from row count");
        if (l.activation == Activation::Identity && k + 1 != layers_.size()) {
            throw PreconditionError(where + ": identity activation is only allowed on the output layer");
        }
        for (double v : l.weights.data()) {
            if (!std::isfinite(v)) throw PreconditionError(where + " has a non-finite weight");
        }
        for (double v : l.bias) {
            if (!std::isfinite(v)) throw PreconditionError(where + " has a non-finite bias");
        }
        fan_in = l.n_out();
    }
}

const FcLayer& Network::layer(std::size_t k) const {
    if (k >= layers_.size()) throw PreconditionError("Network: layer index out of range");
    return layers_[k];
}

std::size_t Network::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
}

std::vector<double> forward(const Network& net, std::span<const double> x) {
    if (x.size() != net.input_dim()) {
        throw DimensionError("forward: input has length " + std::to_string(x.size()) + ", network expects " +
                             std::to_string(net.input_dim()));
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (const FcLayer& l : net.layers()) {
        next.assign(l.n_out(), 0.0);
        for (std::size_t r = 0; r < l.n_out(); ++r) {
            next[r] = activate(l.activation, dot(l.weights.row(r), cur) + l.bias[r]);
        }
        cur.swap(next);
    }
    return cur;
}

namespace detail {

void check_hidden_layer(const Network& net, std::size_t layer_index) {
    if (layer_index >= net.layer_count()) {
        throw PreconditionError("layer index " + std::to_string(layer_index) + " out of range");
    }
    if (layer_index + 1 == net.layer_count()) {
        throw PreconditionError("layer " + std::to_string(layer_index) + " is the output layer and cannot be pruned");
    }
}

void erase_neuron(std::vector<FcLayer>& layers, std::size_t layer_index, std::size_t j) {
    FcLayer& l = layers[layer_index];
    l.weights.erase_row(j);
    l.bias.erase(l.bias.begin() + static_cast<std::ptrdiff_t>(j));
    layers[layer_index + 1].weights.erase_column(j);
}

}  // namespace detail

RescaleResult rescale_relu_layer(const Network& net, std::size_t layer_index) {
    detail::check_hidden_layer(net, layer_index);
    if (net.layer(layer_index).activation != Activation::ReLU) {
        throw PreconditionError("rescale_relu_layer: layer " + std::to_string(layer_index) + " is not ReLU");
    }
    std::vector<FcLayer> layers = net.layers();
    FcLayer& l = layers[layer_index];
    FcLayer& next = layers[layer_index + 1];

    RescaleResult out{net, std::vector<double>(l.n_out(), 1.0), {}};
    for (std::size_t r = 0; r < l.n_out(); ++r) {
        const double alpha = norm(l.weights.row(r));
        if (alpha == 0.0) {
            out.zero_norm_neurons.push_back(r);
            continue;
        }
        if (alpha == 1.0) continue;
        for (double& w : l.weights.row(r)) w /= alpha;
        l.bias[r] /= alpha;
        for (std::size_t k = 0; k < next.n_out(); ++k) next.weights(k, r) *= alpha;
        out.scales[r] = alpha;
    }
    out.network = Network(net.input_dim(), std::move(layers));
    return out;
}

Network delete_neuron(const Network& net, std::size_t layer_index, std::size_t j) {
    detail::check_hidden_layer(net, layer_index);
    const FcLayer& l = net.layer(layer_index);
    if (j >= l.n_out()) throw PreconditionError("delete_neuron: neuron index out of range");
    if (l.n_out() == 1) throw PreconditionError("delete_neuron: cannot remove the last neuron of a layer");
    std::vector<FcLayer> layers = net.layers();
    detail::erase_neuron(layers, layer_index, j);
    return Network(net.input_dim(), std::move(layers));
}

}  // namespace dfprune
