#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dfprune/cutoff.hpp"
#include "dfprune/network.hpp"
#include "dfprune/pruner.hpp"
#include "dfprune/saliency.hpp"

using namespace dfprune;

namespace {

Network make_net(std::size_t d, std::size_t hidden, std::size_t out, Activation act, std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    auto layer = [&](std::size_t n_in, std::size_t n_out, Activation a) {
        FcLayer l{Matrix(n_out, n_in), std::vector<double>(n_out), a};
        for (double& w : l.weights.data()) w = g(rng);
        for (double& b : l.bias) b = g(rng);
        return l;
    };
    return Network(d, {layer(d, hidden, act), layer(hidden, out, Activation::Identity)});
}

void BM_PruneToOne(benchmark::State& state, Activation act) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Network net = make_net(57, n, 2, act);
    for (auto _ : state) {
        auto r = prune_layer(net, 0, n - 1, PrunePolicy::saliency_surgery());
        benchmark::DoNotOptimize(r.trace.steps.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK_CAPTURE(BM_PruneToOne, sigmoid, Activation::Sigmoid)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK_CAPTURE(BM_PruneToOne, relu, Activation::ReLU)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_PruneNaive(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Network net = make_net(57, n, 2, Activation::Sigmoid);
    for (auto _ : state) {
        auto r = prune_layer(net, 0, n - 1, PrunePolicy::naive_magnitude());
        benchmark::DoNotOptimize(r.trace.steps.data());
    }
}
BENCHMARK(BM_PruneNaive)->RangeMultiplier(4)->Range(16, 256);

void BM_BuildSaliencyMatrix(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Network net = make_net(57, n, 10, Activation::ReLU);
    for (auto _ : state) {
        auto m = build_saliency_matrix(net, 0);
        benchmark::DoNotOptimize(m.live_count());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildSaliencyMatrix)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);

void BM_Forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Network net = make_net(784, n, 10, Activation::ReLU);
    std::vector<double> x(784, 0.5);
    for (auto _ : state) {
        auto z = forward(net, x);
        benchmark::DoNotOptimize(z.data());
    }
}
BENCHMARK(BM_Forward)->Arg(100)->Arg(1000);

void BM_DataFreeCutoff(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e(1.0);
    PruneTrace t;
    t.original_size = static_cast<std::size_t>(state.range(0)) + 1;
    for (std::size_t k = 0; k + 1 < t.original_size; ++k) t.steps.push_back({k, k + 1, e(rng), k + 1, std::nullopt});
    for (auto _ : state) benchmark::DoNotOptimize(data_free_cutoff(t).predicted_count);
}
BENCHMARK(BM_DataFreeCutoff)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
