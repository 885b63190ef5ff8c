#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dfprune/cutoff.hpp"
#include "dfprune/pruner.hpp"
#include "dfprune/trainer.hpp"
#include "support/fixtures.hpp"

using namespace dfprune;
using dfprune::testing::fixture_train_config;
using dfprune::testing::kFixtureDataSeed;

namespace {

struct PrunedRun {
    Network net;
    PruneTrace trace;
    std::vector<Network> states;  // states[k] = network after k removals
};

const Dataset& fixture_data() {
    static const Dataset ds = make_spam_like(SpamLikeConfig{}, kFixtureDataSeed);
    return ds;
}

PrunedRun prune_to_one(std::uint64_t seed) {
    PrunedRun r{train(fixture_data(), fixture_train_config(seed)), {}, {}};
    r.states.push_back(r.net);
    auto res = prune_layer(r.net, 0, r.net.layer(0).n_out() - 1, PrunePolicy::saliency_surgery(), {},
                           [&](const PruneStep&, const Network& s) { r.states.push_back(s); });
    r.trace = std::move(res.trace);
    return r;
}

double error_at(const PrunedRun& r, std::size_t k, Split split) { return evaluate(r.states.at(k), fixture_data(), split).error; }

}  // namespace

TEST(Fixture, DataFreeCutoffNearFirstOnePointRise) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const PrunedRun r = prune_to_one(seed);
        const double base = error_at(r, 0, Split::Test);
        std::size_t rise = r.trace.size();
        for (std::size_t k = 1; k <= r.trace.size(); ++k) {
            if (error_at(r, k, Split::Test) >= base + 1.0) {
                rise = k;
                break;
            }
        }
        const auto rep = data_free_cutoff(r.trace);
        EXPECT_LE(std::abs(static_cast<double>(rep.predicted_count) - static_cast<double>(rise)),
                  0.2 * static_cast<double>(rise))
            << "seed " << seed << ": predicted " << rep.predicted_count << ", error first up 1 point at step "
            << rise;
    }
}

TEST(Fixture, DataDrivenCutoffWithinOnePointTwo) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const PrunedRun r = prune_to_one(seed);
        std::size_t calls = 0;
        const auto rep = data_driven_cutoff(
            r.trace,
            [&](std::size_t k) {
                ++calls;
                return error_at(r, k, Split::Test);
            },
            12, 1.0);
        std::vector<double> dense;
        for (std::size_t k = 0; k <= r.trace.size(); ++k) dense.push_back(error_at(r, k, Split::Test));
        const double increase = dense.at(rep.predicted_count) - dense.front();
        EXPECT_LE(calls, 12u);
        EXPECT_LE(increase, 1.2) << "seed " << seed << ": predicted " << rep.predicted_count;
    }
}
