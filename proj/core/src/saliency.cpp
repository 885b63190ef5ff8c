#include "dfprune/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dfprune/errors.hpp"

namespace dfprune {

namespace {

void check_same_length(const WeightSet& wi, const WeightSet& wj, const char* who) {
    if (wi.weights.size() != wj.weights.size()) {
        throw DimensionError(std::string(who) + ": weight-sets have lengths " + std::to_string(wi.weights.size()) +
                             " and " + std::to_string(wj.weights.size()));
    }
}

}  // namespace

void SimilarityConfig::validate() const {
    if (!(denominator_guard > 0.0) || !std::isfinite(denominator_guard)) {
        throw PreconditionError("SimilarityConfig: denominator guard must be a positive finite number");
    }
}

std::string_view to_string(SimilarityMode mode) noexcept {
    switch (mode) {
        case SimilarityMode::RawDifference: return "raw";
        case SimilarityMode::NormalizedHeuristic: return "heuristic";
        case SimilarityMode::Auto: return "auto";
    }
    return "unknown";
}

std::optional<SimilarityMode> parse_similarity_mode(std::string_view name) noexcept {
    if (name == "raw") return SimilarityMode::RawDifference;
    if (name == "heuristic") return SimilarityMode::NormalizedHeuristic;
    if (name == "auto") return SimilarityMode::Auto;
    return std::nullopt;
}

SimilarityMode SimilarityConfig::resolved(Activation act) const noexcept {
    if (mode != SimilarityMode::Auto) return mode;
    return act == Activation::ReLU ? SimilarityMode::NormalizedHeuristic : SimilarityMode::RawDifference;
}

double raw_epsilon(const WeightSet& wi, const WeightSet& wj) {
    check_same_length(wi, wj, "raw_epsilon");
    double s = 0.0;
    for (std::size_t k = 0; k < wi.weights.size(); ++k) {
        const double d = wi.weights[k] - wj.weights[k];
        s += d * d;
    }
    const double db = wi.bias - wj.bias;
    s += db * db;
    return std::sqrt(s);
}

Similarity heuristic_similarity(const WeightSet& wi, const WeightSet& wj, const SimilarityConfig& cfg) {
    check_same_length(wi, wj, "heuristic_similarity");
    cfg.validate();

    const double ni = norm(wi.weights);
    const double nj = norm(wj.weights);
    // A zero row has no direction; it is compared as the zero vector.
    const double inv_i = ni > 0.0 ? 1.0 / ni : 0.0;
    const double inv_j = nj > 0.0 ? 1.0 / nj : 0.0;

    double diff_sq = 0.0;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < wi.weights.size(); ++k) {
        const double d = wi.weights[k] * inv_i - wj.weights[k] * inv_j;
        const double s = wi.weights[k] + wj.weights[k];
        diff_sq += d * d;
        sum_sq += s * s;
    }
    const double weight_term = std::sqrt(diff_sq) / std::max(std::sqrt(sum_sq), cfg.denominator_guard);
    const double bias_term =
        std::abs(wi.bias - wj.bias) / std::max(std::abs(wi.bias + wj.bias), cfg.denominator_guard);

    Similarity out;
    out.degenerate = ni == 0.0 && nj == 0.0 && wi.bias == 0.0 && wj.bias == 0.0;
    out.value = out.degenerate ? 0.0 : weight_term + bias_term;
    return out;
}

double similarity(const WeightSet& wi, const WeightSet& wj, const SimilarityConfig& cfg) {
    switch (cfg.mode) {
        case SimilarityMode::RawDifference: return raw_epsilon(wi, wj);
        case SimilarityMode::NormalizedHeuristic: return heuristic_similarity(wi, wj, cfg).value;
        case SimilarityMode::Auto: break;
    }
    throw PreconditionError("similarity: resolve SimilarityMode::Auto against a layer activation first");
}

double mean_outgoing_square(const FcLayer& next_layer, std::size_t j) {
    if (j >= next_layer.n_in()) {
        throw PreconditionError("mean_outgoing_square: column " + std::to_string(j) + " out of range");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < next_layer.n_out(); ++k) {
        const double a = next_layer.weights(k, j);
        s += a * a;
    }
    return s / static_cast<double>(next_layer.n_out());
}

SaliencyMatrix::SaliencyMatrix(std::size_t layer_index, const FcLayer& layer, const FcLayer& next_layer,
                               const SimilarityConfig& cfg)
    : layer_index_(layer_index), cfg_(cfg) {
    cfg_.validate();
    cfg_.mode = cfg.resolved(layer.activation);
    const std::size_t n = layer.n_out();
    if (n < 2) throw PreconditionError("build_saliency_matrix: layer needs at least two neurons");
    if (next_layer.n_in() != n) throw DimensionError("build_saliency_matrix: next layer fan-in differs from layer width");

    std::vector<WeightSet> sets;
    sets.reserve(n);
    for (std::size_t k = 0; k < n; ++k) sets.push_back(layer.weight_set(k));

    similarity_ = Matrix(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = similarity(sets[i], sets[j], cfg_);
            similarity_(i, j) = s;
            similarity_(j, i) = s;
        }
    }

    mean_square_.resize(n);
    for (std::size_t j = 0; j < n; ++j) mean_square_[j] = mean_outgoing_square(next_layer, j);

    values_ = Matrix(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double s = similarity_(i, j);
            values_(i, j) = i == j ? kDiagonal : mean_square_[j] * (s * s);
        }
    }

    live_.assign(n, true);
    live_ids_.resize(n);
    for (std::size_t k = 0; k < n; ++k) live_ids_[k] = k;
}

std::size_t SaliencyMatrix::position_of(std::size_t id) const {
    auto it = std::lower_bound(live_ids_.begin(), live_ids_.end(), id);
    if (it == live_ids_.end() || *it != id) {
        throw PreconditionError("SaliencyMatrix: neuron " + std::to_string(id) + " is not live");
    }
    return static_cast<std::size_t>(it - live_ids_.begin());
}

SaliencyMatrix::Entry SaliencyMatrix::argmin() const {
    if (live_ids_.size() < 2) throw PreconditionError("SaliencyMatrix: need two live neurons to pick a pair");
    Entry best{0, 0, kDiagonal};
    bool found = false;
    // Column-major scan gives the (removed, kept) lexicographic tie order.
    for (std::size_t j : live_ids_) {
        for (std::size_t i : live_ids_) {
            if (i == j) continue;
            const double v = values_(i, j);
            if (!found || v < best.saliency) {
                best = {i, j, v};
                found = true;
            }
        }
    }
    return best;
}

void SaliencyMatrix::remove(std::size_t id) {
    const std::size_t pos = position_of(id);
    live_ids_.erase(live_ids_.begin() + static_cast<std::ptrdiff_t>(pos));
    live_[id] = false;
}

void SaliencyMatrix::refresh_column(std::size_t id, const FcLayer& next_layer) {
    const double ms = mean_outgoing_square(next_layer, position_of(id));
    mean_square_[id] = ms;
    for (std::size_t i : live_ids_) {
        if (i == id) continue;
        const double s = similarity_(i, id);
        values_(i, id) = ms * (s * s);
    }
}

SaliencyMatrix build_saliency_matrix(const Network& net, std::size_t layer_index, const SimilarityConfig& cfg) {
    if (layer_index + 1 >= net.layer_count()) {
        throw PreconditionError("build_saliency_matrix: layer " + std::to_string(layer_index) + " has no next layer");
    }
    return SaliencyMatrix(layer_index, net.layer(layer_index), net.layer(layer_index + 1), cfg);
}

ContractionReport verify_contraction(Activation act, std::size_t n_samples, double range, std::uint64_t seed) {
    if (act == Activation::Identity) {
        throw PreconditionError("verify_contraction: only ReLU and Sigmoid are checked");
    }
    if (n_samples == 0) throw PreconditionError("verify_contraction: need at least one sample");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-range, range);
    ContractionReport rep;
    rep.samples = n_samples;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double p = u(rng);
        const double q = u(rng);
        const double dh = activate(act, p) - activate(act, q);
        const double dx = p - q;
        if (dh * dh > dx * dx) ++rep.violations;
        if (dx != 0.0) rep.worst_ratio = std::max(rep.worst_ratio, (dh * dh) / (dx * dx));
    }
    return rep;
}

bool BoundSample::holds() const noexcept {
    constexpr double slack = 1e-12;
    // z_full - z_pruned is a difference of two separately rounded outputs, so
    // it carries an absolute error of order ulp(|z|) even when it is tiny.
    double scale = 1.0;
    for (double z : z_full) scale = std::max(scale, std::abs(z));
    const double delta = slack * scale;
    const double root = std::sqrt(projected_bound * (1.0 + slack)) + delta;
    return gap <= root * root && projected_bound <= bound_value * (1.0 + slack);
}

std::vector<BoundSample> verify_bound(const Network& net, std::size_t layer_index, std::size_t i, std::size_t j,
                                      std::span<const std::vector<double>> xs, SimilarityMode mode) {
    if (mode != SimilarityMode::RawDifference) {
        throw PreconditionError("verify_bound: the bound is only established for the raw weight-set difference");
    }
    detail::check_hidden_layer(net, layer_index);
    if (layer_index + 2 != net.layer_count()) {
        throw PreconditionError("verify_bound: the pruned layer must feed the output layer directly");
    }
    const FcLayer& layer = net.layer(layer_index);
    if (layer.activation == Activation::Identity) throw PreconditionError("verify_bound: layer must be ReLU or Sigmoid");
    if (i == j || i >= layer.n_out() || j >= layer.n_out()) {
        throw PreconditionError("verify_bound: need two distinct neurons of the layer");
    }

    const WeightSet wi = layer.weight_set(i);
    const WeightSet wj = layer.weight_set(j);
    const double eps = raw_epsilon(wi, wj);
    const double eps_sq = eps * eps;
    const double a_sq = mean_outgoing_square(net.layer(layer_index + 1), j);

    // Merge j into i with surgery.
    std::vector<FcLayer> layers = net.layers();
    FcLayer& next = layers[layer_index + 1];
    for (std::size_t k = 0; k < next.n_out(); ++k) next.weights(k, i) += next.weights(k, j);
    detail::erase_neuron(layers, layer_index, j);
    const Network pruned(net.input_dim(), std::move(layers));

    // Input of the pruned layer for a network input x.
    std::vector<FcLayer> head(net.layers().begin(), net.layers().begin() + static_cast<std::ptrdiff_t>(layer_index));
    auto layer_input = [&](const std::vector<double>& x) {
        std::vector<double> cur = x;
        for (const FcLayer& l : head) {
            std::vector<double> nxt(l.n_out());
            for (std::size_t r = 0; r < l.n_out(); ++r) nxt[r] = activate(l.activation, dot(l.weights.row(r), cur) + l.bias[r]);
            cur.swap(nxt);
        }
        return cur;
    };

    std::vector<BoundSample> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
        BoundSample s;
        s.x = x;
        s.z_full = forward(net, x);
        s.z_pruned = forward(pruned, x);
        double gap = 0.0;
        for (std::size_t k = 0; k < s.z_full.size(); ++k) {
            const double d = s.z_full[k] - s.z_pruned[k];
            gap += d * d;
        }
        s.gap = gap / static_cast<double>(s.z_full.size());

        const std::vector<double> in = layer_input(x);
        double proj = wj.bias - wi.bias;
        for (std::size_t k = 0; k < in.size(); ++k) proj += (wj.weights[k] - wi.weights[k]) * in[k];
        s.input_norm_sq = squared_norm(in) + 1.0;
        s.projected_bound = a_sq * proj * proj;
        s.bound_value = a_sq * eps_sq * s.input_norm_sq;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace dfprune
