#include "dfprune/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>

#include "dfprune/errors.hpp"

namespace dfprune {

SaliencyHistogram histogram(std::span<const double> values, std::size_t n_bins) {
    if (values.empty()) throw PreconditionError("histogram: no saliency values");
    if (n_bins < 2) throw PreconditionError("histogram: need at least two bins");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    SaliencyHistogram h;
    h.counts.assign(n_bins, 0);
    h.bin_edges.resize(n_bins + 1);
    if (lo == hi) {
        h.degenerate = true;
        std::fill(h.bin_edges.begin(), h.bin_edges.end(), lo);
        h.counts[0] = values.size();
        return h;
    }

    const double width = (hi - lo) / static_cast<double>(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) h.bin_edges[b] = lo + width * static_cast<double>(b);
    h.bin_edges[n_bins] = hi;
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        h.counts[std::min(b, n_bins - 1)]++;
    }
    h.mode_bin = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    return h;
}

SaliencyHistogram histogram(const PruneTrace& trace, std::size_t n_bins) {
    const auto s = trace.saliencies();
    return histogram(s, n_bins);
}

std::string_view to_string(CutoffMethod m) noexcept {
    return m == CutoffMethod::DataFree ? "data-free" : "data-driven";
}

CutoffReport data_free_cutoff(const PruneTrace& trace, std::size_t n_bins, double fraction) {
    if (trace.empty()) throw PreconditionError("data_free_cutoff: empty trace");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw PreconditionError("data_free_cutoff: fraction must lie in (0, 1]");
    if (trace.original_size != 0 && trace.size() + 1 != trace.original_size) {
        throw PreconditionError("data_free_cutoff: trace has " + std::to_string(trace.size()) +
                                " steps; a prune-to-one run of a " + std::to_string(trace.original_size) +
                                "-neuron layer has " + std::to_string(trace.original_size - 1));
    }

    CutoffReport r;
    r.method = CutoffMethod::DataFree;
    r.fraction = fraction;
    r.trace_length = trace.size();
    r.histogram = histogram(trace, n_bins);
    if (r.histogram.degenerate) {
        r.cutoff_saliency = r.histogram.bin_edges.front();
        r.predicted_count = 0;
        r.warnings.push_back("all saliencies are identical; histogram has no mode structure, predicting 0 removals");
        return r;
    }
    r.cutoff_saliency = r.histogram.mode_center();
    const auto below = static_cast<std::size_t>(std::count_if(
        trace.steps.begin(), trace.steps.end(), [&](const PruneStep& s) { return s.saliency <= r.cutoff_saliency; }));
    r.predicted_count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(below)));
    return r;
}

std::vector<double> saliency_slope(std::span<const double> s) {
    const std::size_t n = s.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= 2 ? t - 2 : 0;
        const std::size_t hi = std::min(t + 2, n - 1);
        out[t] = (s[hi] - s[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

namespace {

// Steps 1..n placed at equal quantiles of a density that follows the
// magnitude of the saliency slope. The last step is always included.
std::vector<std::size_t> slope_guided_grid(std::span<const double> saliencies, std::size_t points) {
    const std::size_t n = saliencies.size();
    const auto slope = saliency_slope(saliencies);
    std::vector<double> density(n);
    double mean_abs = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        density[t] = std::abs(slope[t]);
        mean_abs += density[t];
    }
    mean_abs /= static_cast<double>(n);
    // Keep a little mass on flat stretches so they are not skipped entirely.
    const double floor = mean_abs > 0.0 ? 0.1 * mean_abs : 1.0;
    std::vector<double> cum(n);
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        total += density[t] + floor;
        cum[t] = total;
    }

    std::vector<std::size_t> grid;
    for (std::size_t q = 1; q <= points; ++q) {
        const double target = total * static_cast<double>(q) / static_cast<double>(points);
        auto it = std::lower_bound(cum.begin(), cum.end(), target);
        std::size_t step = it == cum.end() ? n : static_cast<std::size_t>(it - cum.begin()) + 1;
        if (q == points) step = n;
        if (grid.empty() || step > grid.back()) grid.push_back(step);
    }
    return grid;
}

}  // namespace

CutoffReport data_driven_cutoff(const PruneTrace& trace, const ErrorOracle& error_oracle, std::size_t budget,
                                double max_error_increase) {
    if (trace.empty()) throw PreconditionError("data_driven_cutoff: empty trace");
    if (budget < 3) throw PreconditionError("data_driven_cutoff: budget must allow at least 3 oracle calls");
    if (!error_oracle) throw PreconditionError("data_driven_cutoff: no error oracle");
    if (!(max_error_increase >= 0.0)) throw PreconditionError("data_driven_cutoff: max_error_increase must be >= 0");

    CutoffReport r;
    r.method = CutoffMethod::DataDriven;
    r.trace_length = trace.size();
    r.budget = budget;
    r.max_error_increase = max_error_increase;

    std::map<std::size_t, double> seen;
    auto measure = [&](std::size_t step) {
        if (auto it = seen.find(step); it != seen.end()) return it->second;
        const double e = error_oracle(step);
        seen.emplace(step, e);
        r.samples.push_back({step, e});
        return e;
    };

    r.baseline_error = measure(0);
    const double threshold = r.baseline_error + max_error_increase;
    const auto saliencies = trace.saliencies();

    // Coarse pass in increasing step order, stopping at the first failure so
    // the rest of the budget goes to refining that bracket.
    const std::size_t coarse = std::max<std::size_t>(1, (budget - 1) / 2);
    std::size_t pass = 0;
    std::optional<std::size_t> fail;
    for (std::size_t step : slope_guided_grid(saliencies, coarse)) {
        if (seen.size() >= budget) break;
        if (measure(step) <= threshold) {
            pass = step;
        } else {
            fail = step;
            break;
        }
    }

    if (!fail && pass != trace.size()) {
        r.warnings.push_back("budget exhausted during the coarse pass; returning the last passing step");
    }
    if (fail) {
        std::size_t hi = *fail;
        while (hi - pass > 1 && seen.size() < budget) {
            const std::size_t mid = pass + (hi - pass) / 2;
            if (measure(mid) <= threshold) {
                pass = mid;
            } else {
                hi = mid;
            }
        }
        if (hi - pass > 1) {
            r.warnings.push_back("budget exhausted before the error crossing was bracketed to one step; returning step " +
                                 std::to_string(pass) + " (first failure at " + std::to_string(hi) + ")");
        }
    }

    r.predicted_count = pass;
    r.cutoff_saliency = pass == 0 ? 0.0 : saliencies[pass - 1];
    return r;
}

}  // namespace dfprune
