#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfprune/pruner.hpp"

namespace dfprune {

struct SaliencyHistogram {
    std::vector<double> bin_edges;  // counts.size() + 1 entries, nondecreasing
    std::vector<std::size_t> counts;
    std::size_t mode_bin = 0;
    // All saliencies identical; everything sits in bin 0.
    bool degenerate = false;

    double bin_center(std::size_t bin) const { return 0.5 * (bin_edges.at(bin) + bin_edges.at(bin + 1)); }
    double mode_center() const { return bin_center(mode_bin); }
};

// Equal-width bins over [min, max] of the values; the last bin is closed.
SaliencyHistogram histogram(std::span<const double> values, std::size_t n_bins);
SaliencyHistogram histogram(const PruneTrace& trace, std::size_t n_bins);

enum class CutoffMethod { DataFree, DataDriven };
std::string_view to_string(CutoffMethod m) noexcept;

struct ErrorSample {
    std::size_t step;
    double error;
};

struct CutoffReport {
    CutoffMethod method = CutoffMethod::DataFree;
    std::size_t predicted_count = 0;
    double cutoff_saliency = 0.0;
    double fraction = 1.0;
    std::size_t trace_length = 0;

    // DataFree evidence
    SaliencyHistogram histogram;

    // DataDriven evidence, in the order the oracle was queried
    std::vector<ErrorSample> samples;
    double baseline_error = 0.0;
    double max_error_increase = 0.0;
    std::size_t budget = 0;

    std::vector<std::string> warnings;
};

inline constexpr std::size_t kDefaultBins = 50;

// Cutoff at the center of the histogram's mode bin; predicts
// floor(fraction * #{steps with saliency <= cutoff}). A degenerate histogram
// predicts zero removals.
CutoffReport data_free_cutoff(const PruneTrace& trace, std::size_t n_bins = kDefaultBins,
                              double fraction = 1.0);

// error_oracle(k) is the test error (in points) after the first k steps of
// the trace; k = 0 is the unpruned baseline.
using ErrorOracle = std::function<double(std::size_t)>;

// Local slope of the saliency curve: centered differences over a 5-step
// window, one-sided near the ends.
std::vector<double> saliency_slope(std::span<const double> saliencies);

// Samples the error oracle more densely where the saliency curve is steep,
// then bisects the first bracket where error crosses
// baseline + max_error_increase. Never calls the oracle more than `budget`
// times (budget >= 3).
CutoffReport data_driven_cutoff(const PruneTrace& trace, const ErrorOracle& error_oracle,
                                std::size_t budget, double max_error_increase);

}  // namespace dfprune
