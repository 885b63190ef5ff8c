#include "dfprune/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dfprune/errors.hpp"

namespace dfprune {

std::vector<std::size_t> Dataset::indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < splits.size(); ++k) {
        if (splits[k] == split) out.push_back(k);
    }
    return out;
}

void Dataset::validate() const {
    if (features.rows() != labels.size()) throw DimensionError("Dataset: feature rows differ from label count");
    if (splits.size() != labels.size()) throw DimensionError("Dataset: split tags differ from label count");
    if (labels.empty()) throw PreconditionError("Dataset: no samples");
    if (num_classes < 2) throw PreconditionError("Dataset: need at least two classes");
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw PreconditionError("Dataset: label " + std::to_string(y) + " out of range");
    }
    for (double v : features.data()) {
        if (!std::isfinite(v)) throw PreconditionError("Dataset: non-finite feature value");
    }
}

void assign_splits(Dataset& ds, std::uint64_t seed, SplitFractions fractions) {
    if (fractions.train <= 0.0 || fractions.val < 0.0 || fractions.train + fractions.val >= 1.0) {
        throw PreconditionError("assign_splits: fractions must leave a nonempty test split");
    }
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(std::round(fractions.train * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::round(fractions.val * static_cast<double>(n)));
    ds.splits.assign(n, Split::Test);
    for (std::size_t k = 0; k < n; ++k) {
        if (k < n_train) {
            ds.splits[order[k]] = Split::Train;
        } else if (k < n_train + n_val) {
            ds.splits[order[k]] = Split::Val;
        }
    }
}

void standardize(Dataset& ds) {
    const auto train = ds.indices(Split::Train);
    if (train.empty()) throw PreconditionError("standardize: no training samples");
    const std::size_t d = ds.dim();
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t k : train) mean += ds.features(k, c);
        mean /= static_cast<double>(train.size());
        double var = 0.0;
        for (std::size_t k : train) {
            const double t = ds.features(k, c) - mean;
            var += t * t;
        }
        var /= static_cast<double>(train.size());
        const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
        for (std::size_t k = 0; k < ds.size(); ++k) ds.features(k, c) = (ds.features(k, c) - mean) * scale;
    }
}

Dataset make_blobs(const BlobConfig& cfg, std::uint64_t seed) {
    if (cfg.samples < 10 || cfg.dim == 0) throw PreconditionError("make_blobs: need >= 10 samples and a positive dimension");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset ds;
    ds.num_classes = 2;
    ds.features = Matrix(cfg.samples, cfg.dim);
    ds.labels.resize(cfg.samples);
    const double offset = 0.5 * cfg.separation / std::sqrt(static_cast<double>(cfg.dim));
    for (std::size_t k = 0; k < cfg.samples; ++k) {
        const int y = static_cast<int>(k % 2);
        const double sign = y == 0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < cfg.dim; ++c) ds.features(k, c) = sign * offset + gauss(rng);
        ds.labels[k] = unit(rng) < cfg.label_noise ? 1 - y : y;
    }
    assign_splits(ds, seed ^ 0x9e3779b97f4a7c15ULL);
    standardize(ds);
    return ds;
}

Dataset make_spam_like(const SpamLikeConfig& cfg, std::uint64_t seed) {
    if (cfg.samples < 10 || cfg.informative == 0 || cfg.informative > cfg.dim || cfg.clusters_per_class == 0) {
        throw PreconditionError("make_spam_like: invalid configuration");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t n_centers = 2 * cfg.clusters_per_class;
    Matrix centers(n_centers, cfg.informative);
    for (double& v : centers.data()) v = 1.5 * gauss(rng);

    // Nuisance features partly mix informative ones, like correlated word counts.
    const std::size_t nuisance = cfg.dim - cfg.informative;
    Matrix mixing(nuisance, cfg.informative);
    for (double& v : mixing.data()) v = unit(rng) < 0.2 ? 0.5 * gauss(rng) : 0.0;

    Dataset ds;
    ds.num_classes = 2;
    ds.features = Matrix(cfg.samples, cfg.dim);
    ds.labels.resize(cfg.samples);
    std::vector<double> z(cfg.informative);
    for (std::size_t k = 0; k < cfg.samples; ++k) {
        // Slight class imbalance, as in the spam table (~40% positives).
        const int y = unit(rng) < 0.4 ? 1 : 0;
        const std::size_t center = static_cast<std::size_t>(y) * cfg.clusters_per_class +
                                   static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.clusters_per_class)) %
                                       cfg.clusters_per_class;
        for (std::size_t c = 0; c < cfg.informative; ++c) {
            z[c] = centers(center, c) + cfg.cluster_spread * gauss(rng);
            ds.features(k, c) = z[c];
        }
        for (std::size_t c = 0; c < nuisance; ++c) {
            ds.features(k, cfg.informative + c) = dot(mixing.row(c), z) + gauss(rng);
        }
        ds.labels[k] = unit(rng) < cfg.label_noise ? 1 - y : y;
    }
    assign_splits(ds, seed ^ 0x9e3779b97f4a7c15ULL);
    standardize(ds);
    return ds;
}

}  // namespace dfprune
