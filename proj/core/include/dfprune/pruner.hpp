#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "dfprune/network.hpp"
#include "dfprune/saliency.hpp"

namespace dfprune {

struct PruneStep {
    // Neuron that absorbed the removed one. Empty for policies without a
    // merge partner (naive, random, constant-neuron folds).
    std::optional<std::size_t> kept;
    std::size_t removed = 0;
    double saliency = 0.0;
    std::size_t step_number = 0;
    std::optional<double> test_error;

    bool operator==(const PruneStep&) const = default;
};

// Removal log for one layer. Neuron ids refer to the layer as it was before
// the first step.
struct PruneTrace {
    std::size_t layer_index = 0;
    std::size_t original_size = 0;
    std::vector<PruneStep> steps;

    std::size_t size() const noexcept { return steps.size(); }
    bool empty() const noexcept { return steps.empty(); }
    std::vector<double> saliencies() const;

    bool operator==(const PruneTrace&) const = default;
};

enum class PolicyKind { SaliencySurgery, SaliencyNoSurgery, NaiveMagnitude, Random };

std::string_view to_string(PolicyKind kind) noexcept;
std::optional<PolicyKind> parse_policy(std::string_view name) noexcept;

class PrunePolicy {
public:
    static PrunePolicy saliency_surgery() { return PrunePolicy(PolicyKind::SaliencySurgery, {}); }
    static PrunePolicy saliency_no_surgery() {
        return PrunePolicy(PolicyKind::SaliencyNoSurgery, {});
    }
    static PrunePolicy naive_magnitude() { return PrunePolicy(PolicyKind::NaiveMagnitude, {}); }
    static PrunePolicy random(std::uint64_t seed) { return PrunePolicy(PolicyKind::Random, seed); }
    static PrunePolicy make(PolicyKind kind, std::uint64_t seed);

    PolicyKind kind() const noexcept { return kind_; }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }
    bool uses_saliency() const noexcept {
        return kind_ == PolicyKind::SaliencySurgery || kind_ == PolicyKind::SaliencyNoSurgery;
    }

private:
    PrunePolicy(PolicyKind kind, std::optional<std::uint64_t> seed) : kind_(kind), seed_(seed) {}

    PolicyKind kind_;
    std::optional<std::uint64_t> seed_;
};

struct PruneOneResult {
    Network network;
    SaliencyMatrix saliency;
    PruneStep step;
};

// One merge: pick the minimum live saliency (i', j'), fold column j' of the
// next layer into column i', delete neuron j', and update the matrix
// incrementally. step_number of the returned step is the count of removals
// the matrix has seen so far.
PruneOneResult prune_one(const Network& net, std::size_t layer_index, const SaliencyMatrix& matrix);

// Called after every removal with the step just taken and the network state
// at that point.
using PruneObserver = std::function<void(const PruneStep&, const Network&)>;

struct PruneLayerResult {
    Network network;
    PruneTrace trace;
};

// Removes `count` neurons from a hidden layer under `policy`.
//
// Saliency policies first normalize ReLU layers with rescale_relu_layer and
// fold neurons with all-zero incoming weights (constant outputs) into the
// next layer's bias before any merge. Sigmoid layers are ranked on their raw
// weights.
PruneLayerResult prune_layer(const Network& net, std::size_t layer_index, std::size_t count,
                             const PrunePolicy& policy, const SimilarityConfig& cfg = {},
                             const PruneObserver& observer = {});

struct LayerPlan {
    std::size_t layer_index;
    std::size_t count;
};

struct PruneNetworkResult {
    Network network;
    std::vector<PruneTrace> traces;
};

// Front-to-back multi-layer pruning. The plan must be strictly ascending in
// layer index; each layer is ranked afresh after the earlier ones are done.
PruneNetworkResult prune_network(const Network& net, const std::vector<LayerPlan>& plan,
                                 const PrunePolicy& policy, const SimilarityConfig& cfg = {});

// 100 * removed / total
double compression_percent(std::size_t removed_params, std::size_t total_params);

// Parameters freed by removing `neurons` neurons with the given fan-in and
// next-layer fan-out: neurons * (fan_in + 1 + fan_out).
std::size_t removed_parameter_count(std::size_t neurons, std::size_t fan_in, std::size_t fan_out);

}  // namespace dfprune
