#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "illiq/dual.hpp"
#include "illiq/primal.hpp"
#include "illiq/valuation.hpp"

using namespace illiq;

namespace {

struct Bench {
    MarketModel model;
    LossSpec indicator, entropic;
    ClaimProcess call;
};

/// Recombining-free binary tree with linear prices 2^{+-} and a terminal call.
Bench make_bench(int periods) {
    std::vector<ScenarioTree::NodeSpec> specs = {{0, 0, -1, 1.0}};
    int next = 1;
    std::vector<std::pair<int, double>> frontier = {{0, 1.0}};
    std::vector<double> price = {1.0};
    for (int t = 1; t <= periods; ++t) {
        std::vector<std::pair<int, double>> grown;
        for (auto [parent, s] : frontier) {
            for (double f : {1.6, 0.7}) {
                specs.push_back({next, t, parent, 0.5});
                price.push_back(s * f);
                grown.push_back({next++, s * f});
            }
        }
        frontier = std::move(grown);
    }
    TreePtr tree = ScenarioTree::build(specs);

    Bench b;
    CostSpec costs;
    costs.liquid_cash = true;
    costs.phi.resize(tree->num_nodes());
    for (int n = 0; n < tree->num_nodes(); ++n) {
        costs.phi[n].push_back(ConvexFunction::linear(1.0));
        costs.phi[n].push_back(
            ConvexFunction::pwl({0.0}, {0.98 * price[n], 1.02 * price[n]}, 0.0, 0.0));
    }
    b.model = make_market_model(tree, 2, std::move(costs));
    for (int t = 0; t <= periods; ++t) {
        b.indicator.v.push_back(ConvexFunction::indicator_leq(0.0));
        b.entropic.v.push_back(t == periods ? ConvexFunction::exponential(1.0)
                                            : ConvexFunction::indicator_leq(0.0));
    }
    b.call = ClaimProcess(tree, 1);
    for (int n : tree->leaves()) b.call.at(n) = std::max(price[n] - 1.0, 0.0);
    return b;
}

void BM_pwl_conjugate(benchmark::State& state) {
    std::mt19937 rng(42);
    std::normal_distribution<double> gauss(0.0, 2.0);
    std::vector<ConvexFunction> fns;
    for (int i = 0; i < 64; ++i) {
        std::vector<double> breaks = {-2.0 + 0.1 * i, 0.0, 1.0 + 0.05 * i};
        std::vector<double> slopes = {gauss(rng), 0.0, 1.0, 3.0 + i * 0.1};
        std::sort(slopes.begin(), slopes.end());
        fns.push_back(ConvexFunction::pwl(breaks, slopes, 0.0, 0.0));
    }
    for (auto _ : state) {
        for (const ConvexFunction& f : fns) benchmark::DoNotOptimize(f.conjugate());
    }
}

void BM_superhedge(benchmark::State& state) {
    const Bench b = make_bench(static_cast<int>(state.range(0)));
    const ClaimProcess p0 = numeraire_premium(b.model.tree);
    for (auto _ : state)
        benchmark::DoNotOptimize(superhedge(b.model, b.call, p0, HedgeSide::Sup));
}

void BM_solve_alm_entropic(benchmark::State& state) {
    const Bench b = make_bench(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_alm(b.model, b.entropic, b.call));
}

void BM_solve_dual_entropic(benchmark::State& state) {
    const Bench b = make_bench(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_dual(b.model, b.entropic, b.call));
}

BENCHMARK(BM_pwl_conjugate);
BENCHMARK(BM_superhedge)->Arg(3)->Arg(5)->Arg(7);
BENCHMARK(BM_solve_alm_entropic)->Arg(3)->Arg(5);
BENCHMARK(BM_solve_dual_entropic)->Arg(3)->Arg(5);

}  // namespace

BENCHMARK_MAIN();
