#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dfprune/dataset.hpp"
#include "dfprune/network.hpp"
#include "dfprune/pruner.hpp"

namespace dfprune {

struct TrainConfig {
    std::size_t hidden_units = 20;
    Activation activation = Activation::Sigmoid;
    double learning_rate = 0.1;
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;  // non-bias weights only

    void validate() const;
};

// d -> hidden -> C network with identity logits, seeded uniform
// Glorot initialization.
Network init_network(std::size_t input_dim, std::size_t num_classes, const TrainConfig& cfg);

// Plain minibatch SGD on softmax cross-entropy over the Train split.
// Throws TrainingError when the loss stops being finite.
Network train(const Dataset& ds, const TrainConfig& cfg);

// w -= lr * (grad_w + weight_decay * w);  b -= lr * grad_b
void apply_sgd_update(FcLayer& layer, const Matrix& grad_w, std::span<const double> grad_b,
                      double learning_rate, double weight_decay);

// Index of the largest entry, smallest index on ties.
std::size_t argmax(std::span<const double> values);

struct Evaluation {
    double accuracy = 0.0;  // percent
    double error = 0.0;     // 100 - accuracy
    std::size_t samples = 0;
};

Evaluation evaluate(const Network& net, const Dataset& ds, Split split);

struct CurvePoint {
    std::size_t step;  // neurons removed so far
    double error;      // percent
};

// Prunes the layer down to one neuron, evaluating on `split` after every
// `every`-th step. The first point is the unpruned baseline and the final
// step is always included.
std::vector<CurvePoint> error_curve(const Network& net, std::size_t layer_index, const Dataset& ds,
                                    const PrunePolicy& policy, const SimilarityConfig& cfg = {},
                                    std::size_t every = 1, Split split = Split::Test);

}  // namespace dfprune
