#include <benchmark/benchmark.h>

#include "mlmcjd/mlmc.hpp"

using namespace mlmcjd;

namespace {

void BM_Philox(benchmark::State& state) {
    RngStream s({1, 0, 0, Purpose::BrownianIncrement});
    for (auto _ : state) benchmark::DoNotOptimize(s.normal());
}
BENCHMARK(BM_Philox);

void BM_CoupledPath(benchmark::State& state) {
    const ModelSpec m = merton_model(MertonParams{});
    const int level = static_cast<int>(state.range(0));
    CoupledPaths cp;
    std::uint64_t i = 0;
    for (auto _ : state) {
        PathStreams streams(7, level, i++);
        simulate_coupled(m, level, streams, {}, cp);
        benchmark::DoNotOptimize(cp.fine.terminal);
    }
    state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << level));
}
BENCHMARK(BM_CoupledPath)->DenseRange(2, 8, 2);

void BM_LevelSample(benchmark::State& state) {
    const ModelSpec constant = merton_model(MertonParams{});
    const ModelSpec varying = state_dependent_model(MertonParams{});
    const auto method = static_cast<Method>(state.range(0));
    const ModelSpec& m = method == Method::ConstantRate ? constant : varying;
    OptionSpec opt;
    opt.kind = OptionKind::Lookback;
    LevelSampler sampler(m, opt, method);
    std::uint64_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(6, 3, i++));
    state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_LevelSample)->DenseRange(0, 3);

void BM_EstimateLevel(benchmark::State& state) {
    const ModelSpec m = merton_model(MertonParams{});
    const OptionSpec opt;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_level(m, opt, Method::ConstantRate, 5, 8192, 11));
    }
    state.SetItemsProcessed(state.iterations() * 8192);
}
BENCHMARK(BM_EstimateLevel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
