// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dfprune/cutoff.hpp"
#include "dfprune/model_io.hpp"
#include "dfprune/network.hpp"
#include "dfprune/pruner.hpp"
#include "dfprune/saliency.hpp"
#include "dfprune/trainer.hpp"
#include "support/fixtures.hpp"

using namespace dfprune;
using dfprune::testing::random_input;
using dfprune::testing::random_network;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string fix(double v, int digits = 2) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double max_output_deviation(const Network& a, const Network& b, std::size_t n_inputs, std::uint64_t seed,
                            double range) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (std::size_t s = 0; s < n_inputs; ++s) {
        const auto x = random_input(rng, a.input_dim(), range);
        const auto za = forward(a, x);
        const auto zb = forward(b, x);
        for (std::size_t k = 0; k < za.size(); ++k) worst = std::max(worst, std::abs(za[k] - zb[k]));
    }
    return worst;
}

// Hidden layer of `base` distinct neurons followed by `dups` exact copies of
// some of them; the copies get their own outgoing weights.
Network with_duplicates(std::uint64_t seed, Activation act, std::size_t base, std::size_t dups) {
    std::mt19937_64 rng(seed);
    const std::size_t d = 8, c = 3, n = base + dups;
    FcLayer hidden = dfprune::testing::random_layer(rng, d, n, act);
    FcLayer out = dfprune::testing::random_layer(rng, n, c, Activation::Identity);
    std::uniform_int_distribution<std::size_t> pick(0, base - 1);
    for (std::size_t k = base; k < n; ++k) {
        const std::size_t src = pick(rng);
        for (std::size_t col = 0; col < d; ++col) hidden.weights(k, col) = hidden.weights(src, col);
        hidden.bias[k] = hidden.bias[src];
    }
    return Network(d, {hidden, out});
}

Outcome duplicate_merge() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    bool zero_saliency = true;
    std::size_t nets = 0;
    for (auto act : {Activation::ReLU, Activation::Sigmoid}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Network net = with_duplicates(100 + seed, act, 10, 6);
            const auto r = prune_layer(net, 0, 6, PrunePolicy::saliency_surgery());
            for (const auto& s : r.trace.steps) zero_saliency = zero_saliency && s.saliency == 0.0;
            worst = std::max(worst, max_output_deviation(net, r.network, 1000, seed, 3.0));
            ++nets;
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && zero_saliency && secs < 1.0,
            std::to_string(nets) + " nets, max output change " + sci(worst) + " (limit 1e-12), duplicate steps " +
                (zero_saliency ? "all" : "not all") + " at saliency 0, " + fix(secs, 3) + " s (limit 1 s)"};
}

Outcome contraction() {
    const auto t0 = Clock::now();
    const auto relu = verify_contraction(Activation::ReLU, 100000, 20.0, 1);
    const auto sig = verify_contraction(Activation::Sigmoid, 100000, 20.0, 2);
    const double secs = seconds_since(t0);
    return {relu.violations == 0 && sig.violations == 0 && secs < 1.0,
            "relu " + std::to_string(relu.violations) + "/" + std::to_string(relu.samples) + " violations, sigmoid " +
                std::to_string(sig.violations) + "/" + std::to_string(sig.samples) + " violations, worst ratios " +
                fix(relu.worst_ratio, 4) + " / " + fix(sig.worst_ratio, 4) + ", " + fix(secs, 3) + " s"};
}

Outcome bound_chain() {
    std::size_t violations = 0, samples = 0;
    double tightest = 0.0;
    const SimilarityConfig raw{SimilarityMode::RawDifference};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Network net = random_network(300 + seed, {6, 12, 3}, Activation::ReLU);
        const auto e = build_saliency_matrix(net, 0, raw).argmin();
        std::mt19937_64 rng(seed);
        std::vector<std::vector<double>> xs;
        for (int s = 0; s < 1000; ++s) xs.push_back(random_input(rng, 6, 4.0));
        for (const auto& b : verify_bound(net, 0, e.kept, e.removed, xs)) {
            ++samples;
            if (!b.holds()) ++violations;
            if (b.bound_value > 0.0) tightest = std::max(tightest, b.gap / b.bound_value);
        }
    }
    return {violations == 0 && samples == 20000,
            "20 nets x 1000 inputs, " + std::to_string(violations) + " violations, max gap/bound " + fix(tightest, 4)};
}

Outcome rescale_invariance() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Network net = random_network(400 + seed, {7, 15, 9, 4}, Activation::ReLU, 2.0);
        Network scaled = rescale_relu_layer(net, 0).network;
        scaled = rescale_relu_layer(scaled, 1).network;
        worst = std::max(worst, max_output_deviation(net, scaled, 1000, seed, 5.0));
    }
    return {worst <= 1e-9, "10 nets, both hidden layers rescaled, max deviation " + sci(worst) + " (limit 1e-9)"};
}

Outcome incremental_oracle() {
    double worst = 0.0;
    std::size_t checks = 0;
    for (auto act : {Activation::ReLU, Activation::Sigmoid}) {
        Network cur = random_network(500, {9, 30, 5}, act);
        SaliencyMatrix m = build_saliency_matrix(cur, 0);
        while (cur.layer(0).n_out() > 1) {
            auto r = prune_one(cur, 0, m);
            cur = std::move(r.network);
            m = std::move(r.saliency);
            if (cur.layer(0).n_out() < 2) break;
            const auto fresh = build_saliency_matrix(cur, 0, m.config());
            const auto& ids = m.live_ids();
            for (std::size_t a = 0; a < ids.size(); ++a) {
                for (std::size_t b = 0; b < ids.size(); ++b) {
                    if (a == b) continue;
                    worst = std::max(worst, dfprune::testing::relative_diff(m.at(ids[a], ids[b]), fresh.at(a, b)));
                    ++checks;
                }
            }
        }
    }
    return {worst <= 1e-12, "relu and sigmoid 30 -> 1, " + std::to_string(checks) + " entries, max relative diff " +
                                sci(worst) + " (limit 1e-12)"};
}

// ---- trained fixture shared by the policy criteria

struct Fixture {
    Dataset data;
    std::vector<Network> nets;
    // curves[policy][seed][step] = test error
    std::vector<std::vector<std::vector<double>>> curves;
    std::size_t hidden = 0;
};

const PolicyKind kPolicies[] = {PolicyKind::SaliencySurgery, PolicyKind::SaliencyNoSurgery,
                                PolicyKind::NaiveMagnitude, PolicyKind::Random};

Fixture build_fixture() {
    Fixture f;
    f.data = make_spam_like(SpamLikeConfig{}, dfprune::testing::kFixtureDataSeed);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        f.nets.push_back(train(f.data, dfprune::testing::fixture_train_config(seed)));
    }
    f.hidden = f.nets.front().layer(0).n_out();
    for (PolicyKind kind : kPolicies) {
        std::vector<std::vector<double>> per_seed;
        for (std::size_t s = 0; s < f.nets.size(); ++s) {
            std::vector<double> errs;
            for (const auto& p : error_curve(f.nets[s], 0, f.data, PrunePolicy::make(kind, s))) errs.push_back(p.error);
            per_seed.push_back(std::move(errs));
        }
        f.curves.push_back(std::move(per_seed));
    }
    return f;
}

double mean_at(const Fixture& f, std::size_t policy, std::size_t step) {
    double sum = 0.0;
    for (const auto& c : f.curves[policy]) sum += c.at(step);
    return sum / static_cast<double>(f.curves[policy].size());
}

Outcome policy_ordering(const Fixture& f) {
    bool ok = true;
    std::ostringstream os;
    const double base = mean_at(f, 0, 0);
    os << f.nets.size() << " seeds, baseline " << fix(base);
    for (double frac : {0.25, 0.5, 0.75}) {
        const auto step = static_cast<std::size_t>(std::lround(frac * static_cast<double>(f.hidden)));
        const double sal = mean_at(f, 0, step), naive = mean_at(f, 2, step), rnd = mean_at(f, 3, step);
        ok = ok && sal <= naive && naive <= rnd;
        os << "; " << static_cast<int>(frac * 100) << "% sal/naive/rand " << fix(sal) << "/" << fix(naive) << "/"
           << fix(rnd);
    }
    const double half = mean_at(f, 0, f.hidden / 2) - base;
    ok = ok && half <= 3.0;
    os << "; 50% increase " << fix(half) << " (limit 3)";
    return {ok, os.str()};
}

Outcome surgery_ablation(const Fixture& f) {
    // final quarter of the prune-to-one run: steps with at most a quarter
    // of the neurons left
    const std::size_t first = f.hidden - f.hidden / 4;
    auto quarter_mean = [&](std::size_t policy) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& c : f.curves[policy]) {
            for (std::size_t k = first; k < c.size(); ++k, ++n) sum += c[k];
        }
        return sum / static_cast<double>(n);
    };
    const double with = quarter_mean(0), without = quarter_mean(1);
    return {without - with >= 5.0, "steps " + std::to_string(first) + ".." + std::to_string(f.hidden - 1) +
                                       ", nosurgery " + fix(without) + " vs surgery " + fix(with) + ", gap " +
                                       fix(without - with) + " (need >= 5)"};
}

Outcome data_free_sanity(const Fixture& f) {
    bool ok = true;
    std::ostringstream os;
    os << "predicted/increase per seed:";
    for (std::size_t s = 0; s < f.nets.size(); ++s) {
        const auto trace = prune_layer(f.nets[s], 0, f.hidden - 1, PrunePolicy::saliency_surgery()).trace;
        const auto rep = data_free_cutoff(trace);
        const double inc = f.curves[0][s].at(rep.predicted_count) - f.curves[0][s].at(0);
        // re-measure independently of the curve
        const Network pruned =
            rep.predicted_count ? prune_layer(f.nets[s], 0, rep.predicted_count, PrunePolicy::saliency_surgery()).network
                                : f.nets[s];
        const double remeasured = evaluate(pruned, f.data, Split::Test).error - f.curves[0][s].at(0);
        ok = ok && remeasured <= 3.0 && inc == remeasured;
        os << " " << rep.predicted_count << "/" << fix(remeasured);
    }
    double lo = 1e300, hi = -1e300;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double m = histogram(dfprune::testing::saliency_mixture(seed), kDefaultBins).mode_center();
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    ok = ok && lo >= 1.1 && hi <= 1.3;
    os << " (limit 3); mixture mode over 10 draws in [" << fix(lo, 3) << ", " << fix(hi, 3) << "] (need [1.1, 1.3])";
    return {ok, os.str()};
}

Outcome compression_arithmetic() {
    const double pct = compression_percent(9'300'000, 60'900'000);
    const std::size_t count = removed_parameter_count(700, 9216, 4096);
    const double millions = std::round(static_cast<double>(count) / 1e5) / 10.0;
    return {std::abs(pct - 15.28) <= 0.05 && count == 9'319'100 && millions == 9.3,
            "9.3M of 60.9M -> " + fix(pct, 4) + "% (target 15.28 +- 0.05); 700 x (9216 + 1 + 4096) = " +
                std::to_string(count) + " -> " + fix(millions, 1) + "M"};
}

Outcome performance(const Fixture& f) {
    const auto path = fs::temp_directory_path() / "dfprune_acceptance_trace.csv";
    const auto t0 = Clock::now();
    const auto r = prune_layer(f.nets.front(), 0, f.hidden - 1, PrunePolicy::saliency_surgery());
    export_trace(r.trace, path);
    const double secs = seconds_since(t0);
    fs::remove(path);
    return {secs < 1.0 && r.trace.size() == f.hidden - 1,
            std::to_string(f.hidden) + " -> 1 with trace export in " + fix(secs * 1000.0, 2) + " ms (limit 1 s)"};
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome io_round_trip(const Fixture& f) {
    const auto dir = fs::temp_directory_path() / "dfprune_acceptance_io";
    fs::create_directories(dir);
    bool models_ok = true;
    std::size_t compared = 0;
    std::vector<Network> nets = f.nets;
    nets.push_back(random_network(600, {5, 11, 7, 2}, Activation::ReLU, 3.0));
    for (std::size_t k = 0; k < nets.size(); ++k) {
        const auto p = dir / ("m" + std::to_string(k) + ".model");
        save_model(nets[k], p);
        const Network back = load_model(p);
        models_ok = models_ok && back == nets[k];
        for (std::size_t li = 0; li < back.layer_count(); ++li) {
            const auto& a = nets[k].layer(li).weights.data();
            const auto& b = back.layer(li).weights.data();
            for (std::size_t e = 0; e < a.size(); ++e, ++compared) models_ok = models_ok && bit_equal(a[e], b[e]);
        }
    }
    bool traces_ok = true;
    std::size_t values = 0;
    for (std::size_t s = 0; s < f.nets.size(); ++s) {
        auto t = prune_layer(f.nets[s], 0, f.hidden - 1, PrunePolicy::saliency_surgery()).trace;
        for (std::size_t k = 0; k < t.size(); ++k) t.steps[k].test_error = f.curves[0][s].at(k + 1);
        const auto p = dir / ("t" + std::to_string(s) + ".csv");
        export_trace(t, p);
        const auto back = import_trace(p);
        traces_ok = traces_ok && back == t;
        for (std::size_t k = 0; k < t.size() && k < back.size(); ++k, ++values) {
            traces_ok = traces_ok && bit_equal(back.steps[k].saliency, t.steps[k].saliency);
        }
    }
    fs::remove_all(dir);
    return {models_ok && traces_ok, std::to_string(nets.size()) + " models (" + std::to_string(compared) +
                                        " weights) " + (models_ok ? "bit-exact" : "DIFFER") + "; " +
                                        std::to_string(values) + " trace saliencies " +
                                        (traces_ok ? "bit-exact" : "DIFFER") + " after re-import"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "duplicate-merge exactness", duplicate_merge);
    report(2, "activation contraction", contraction);
    report(3, "bound chain", bound_chain);
    report(4, "relu rescale invariance", rescale_invariance);
    report(5, "incremental saliency update", incremental_oracle);

    const auto t0 = Clock::now();
    const Fixture fixture = build_fixture();
    std::printf("       fixture: 5 x 20-unit sigmoid nets on spam-like data, %zu test samples, built in %.1f s\n",
                fixture.data.indices(Split::Test).size(), seconds_since(t0));

    report(6, "policy ordering", [&] { return policy_ordering(fixture); });
    report(7, "surgery ablation", [&] { return surgery_ablation(fixture); });
    report(8, "data-free cutoff sanity", [&] { return data_free_sanity(fixture); });
    report(9, "compression arithmetic", compression_arithmetic);
    report(10, "prune-to-one performance", [&] { return performance(fixture); });
    report(11, "round-trip io", [&] { return io_round_trip(fixture); });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
