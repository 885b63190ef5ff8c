#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dfprune/matrix.hpp"

namespace dfprune {

enum class Activation { ReLU, Sigmoid, Identity };

double activate(Activation act, double x) noexcept;
std::string_view to_string(Activation act) noexcept;
std::optional<Activation> parse_activation(std::string_view name) noexcept;

// One neuron's incoming weights W' and bias b.
struct WeightSet {
    std::vector<double> weights;
    double bias = 0.0;
};

// Dense fully connected layer computing h(W x + b).
struct FcLayer {
    Matrix weights;  // n_out x n_in
    std::vector<double> bias;
    Activation activation = Activation::ReLU;

    std::size_t n_in() const noexcept { return weights.cols(); }
    std::size_t n_out() const noexcept { return weights.rows(); }
    std::size_t parameter_count() const noexcept { return n_out() * (n_in() + 1); }

    WeightSet weight_set(std::size_t neuron) const;
    // Coefficients a_j that neuron j of the previous layer feeds into this one.
    std::vector<double> outgoing(std::size_t prev_neuron) const { return weights.column(prev_neuron); }

    bool operator==(const FcLayer&) const = default;
};

// Immutable feedforward stack of fully connected layers. Construction
// validates shapes, finiteness, and that Identity only appears last.
class Network {
public:
    Network(std::size_t input_dim, std::vector<FcLayer> layers);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    std::size_t output_dim() const noexcept { return layers_.back().n_out(); }
    const FcLayer& layer(std::size_t k) const;
    const std::vector<FcLayer>& layers() const noexcept { return layers_; }
    std::size_t parameter_count() const noexcept;

    bool operator==(const Network&) const = default;

private:
    std::size_t input_dim_;
    std::vector<FcLayer> layers_;
};

std::vector<double> forward(const Network& net, std::span<const double> x);

struct RescaleResult {
    Network network;
    // alpha per neuron of the rescaled layer; 1 for rows left untouched.
    std::vector<double> scales;
    // Neurons whose incoming weight row has zero norm. Their output is the
    // constant h(b) and they are never rescaled.
    std::vector<std::size_t> zero_norm_neurons;
};

// Scales every incoming row (and its bias) of a ReLU layer to unit norm and
// multiplies the matching outgoing column of the next layer by the removed
// factor. Exact under ReLU positive homogeneity; the network function is
// unchanged.
RescaleResult rescale_relu_layer(const Network& net, std::size_t layer_index);

// Removes neuron j of a hidden layer: its row and bias, and column j of the
// next layer.
Network delete_neuron(const Network& net, std::size_t layer_index, std::size_t j);

namespace detail {
// In-place variants shared by the pruner. They assume validated indices.
void erase_neuron(std::vector<FcLayer>& layers, std::size_t layer_index, std::size_t j);
void check_hidden_layer(const Network& net, std::size_t layer_index);
}  // namespace detail

}  // namespace dfprune
