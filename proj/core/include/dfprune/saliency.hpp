#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dfprune/matrix.hpp"
#include "dfprune/network.hpp"

namespace dfprune {

// Auto picks NormalizedHeuristic for ReLU layers, where unit-norm rescaling
// is exact, and RawDifference for every other activation.
enum class SimilarityMode { RawDifference, NormalizedHeuristic, Auto };

std::string_view to_string(SimilarityMode mode) noexcept;
std::optional<SimilarityMode> parse_similarity_mode(std::string_view name) noexcept;

struct SimilarityConfig {
    SimilarityMode mode = SimilarityMode::Auto;
    double denominator_guard = 1e-12;

    void validate() const;
    // Concrete mode for a layer with this activation.
    SimilarityMode resolved(Activation act) const noexcept;
};

// ||[W'_i, b_i] - [W'_j, b_j]||_2
double raw_epsilon(const WeightSet& wi, const WeightSet& wj);

struct Similarity {
    double value = 0.0;
    // Both weight-sets entirely zero; value is reported as 0.
    bool degenerate = false;
};

// ||unit(W'_i) - unit(W'_j)|| / ||W'_i + W'_j||  +  |b_i - b_j| / |b_i + b_j|
// Only the non-bias weights are normalized; both denominators are floored at
// cfg.denominator_guard.
Similarity heuristic_similarity(const WeightSet& wi, const WeightSet& wj,
                                const SimilarityConfig& cfg = {});

// Similarity under cfg.mode, which must not be Auto.
double similarity(const WeightSet& wi, const WeightSet& wj, const SimilarityConfig& cfg);

// <a_j^2>: mean over next-layer neurons of the squared coefficient from j.
double mean_outgoing_square(const FcLayer& next_layer, std::size_t j);

// Pairwise saliency s(i, j) = <a_j^2> * sim(i, j)^2 for one hidden layer.
// The second index is the removal candidate; the first one is kept and
// absorbs its outgoing coefficients.
//
// Rows and columns are addressed by the neuron's index in the layer as it
// was when the matrix was built ("original" ids). Removed ids stay in the
// backing storage but are marked dead.
class SaliencyMatrix {
public:
    static constexpr double kDiagonal = std::numeric_limits<double>::max();

    SaliencyMatrix() = default;
    SaliencyMatrix(std::size_t layer_index, const FcLayer& layer, const FcLayer& next_layer,
                   const SimilarityConfig& cfg);

    std::size_t layer_index() const noexcept { return layer_index_; }
    std::size_t original_size() const noexcept { return live_.size(); }
    std::size_t live_count() const noexcept { return live_ids_.size(); }
    bool is_live(std::size_t id) const { return live_.at(id); }
    // Ids of surviving neurons in current layer order.
    const std::vector<std::size_t>& live_ids() const noexcept { return live_ids_; }
    // Current row position of a live id inside the pruned layer.
    std::size_t position_of(std::size_t id) const;
    // Mode is already resolved against the layer activation.
    const SimilarityConfig& config() const noexcept { return cfg_; }

    double at(std::size_t i, std::size_t j) const { return values_(i, j); }
    double similarity_at(std::size_t i, std::size_t j) const { return similarity_(i, j); }
    double mean_square_at(std::size_t j) const { return mean_square_.at(j); }

    struct Entry {
        std::size_t kept;
        std::size_t removed;
        double saliency;
    };
    // Minimum over live off-diagonal pairs; ties go to the smallest removed
    // id, then the smallest kept id. Requires live_count() >= 2.
    Entry argmin() const;

    // Drops id from the live set.
    void remove(std::size_t id);
    // Refreshes <a_j^2> for id from the (already updated) next layer and
    // recomputes column id.
    void refresh_column(std::size_t id, const FcLayer& next_layer);

private:
    std::size_t layer_index_ = 0;
    SimilarityConfig cfg_{};
    Matrix similarity_;
    Matrix values_;
    std::vector<double> mean_square_;
    std::vector<bool> live_;
    std::vector<std::size_t> live_ids_;
};

SaliencyMatrix build_saliency_matrix(const Network& net, std::size_t layer_index,
                                     const SimilarityConfig& cfg = {});

struct ContractionReport {
    std::size_t samples = 0;
    std::size_t violations = 0;
    // max over samples of (h(p) - h(q))^2 / (p - q)^2, p != q
    double worst_ratio = 0.0;
};

// Samples (p, q) uniformly in [-range, range]^2 and counts violations of
// (h(p) - h(q))^2 <= (p - q)^2.
ContractionReport verify_contraction(Activation act, std::size_t n_samples, double range,
                                     std::uint64_t seed = 0);

struct BoundSample {
    std::vector<double> x;
    std::vector<double> z_full;
    std::vector<double> z_pruned;
    // <(z_full - z_pruned)^2> over output neurons
    double gap = 0.0;
    // <a_j^2> (eps . X)^2, X = [x, 1]
    double projected_bound = 0.0;
    // <a_j^2> ||eps||^2 ||X||^2
    double bound_value = 0.0;
    // ||X||^2 with the bias coordinate absorbed
    double input_norm_sq = 0.0;

    // Both links of gap <= projected_bound <= bound_value up to rounding:
    // gap <= (sqrt(projected) + 1e-12 |z|)^2, and a relative 1e-12 on the
    // second link.
    bool holds() const noexcept;
};

// Checks the removal bound for merging hidden neuron j into i (with surgery)
// in a single-hidden-layer network, one sample per input. Only the raw
// difference is admissible; passing NormalizedHeuristic is rejected.
std::vector<BoundSample> verify_bound(const Network& net, std::size_t layer_index, std::size_t i,
                                      std::size_t j, std::span<const std::vector<double>> xs,
                                      SimilarityMode mode = SimilarityMode::RawDifference);

}  // namespace dfprune
