#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dfprune/matrix.hpp"

namespace dfprune {

enum class Split : std::uint8_t { Train, Val, Test };

// Labeled tabular data with a per-sample split tag.
struct Dataset {
    Matrix features;          // N x d
    std::vector<int> labels;  // 0..num_classes-1
    std::vector<Split> splits;
    int num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::vector<std::size_t> indices(Split split) const;

    // Throws DimensionError / PreconditionError on inconsistent fields or
    // non-finite features.
    void validate() const;
};

struct SplitFractions {
    double train = 0.6;
    double val = 0.2;  // test gets the remainder
};

// Shuffles sample order with `seed` and tags the first fractions.train of
// them Train, the next fractions.val Val, and the rest Test.
void assign_splits(Dataset& ds, std::uint64_t seed, SplitFractions fractions = {});

// Zero-mean unit-variance per feature, using Train samples only for the
// statistics. Constant features are centered but not scaled.
void standardize(Dataset& ds);

struct BlobConfig {
    std::size_t samples = 1000;
    std::size_t dim = 10;
    double separation = 4.0;   // distance between the two class means
    double label_noise = 0.0;  // probability of flipping a label
};

// Two Gaussian blobs with identity covariance, split and standardized.
Dataset make_blobs(const BlobConfig& cfg, std::uint64_t seed);

struct SpamLikeConfig {
    std::size_t samples = 4300;
    std::size_t dim = 57;
    std::size_t informative = 12;  // features that carry class signal
    std::size_t clusters_per_class = 3;
    double cluster_spread = 1.0;
    double label_noise = 0.04;
};

// Two-class, 57-feature mixture-of-clusters data shaped like the classic
// spam table: nonlinear class boundary, nuisance features, mild label noise.
Dataset make_spam_like(const SpamLikeConfig& cfg, std::uint64_t seed);

}  // namespace dfprune
