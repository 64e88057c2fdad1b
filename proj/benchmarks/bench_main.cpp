#include <benchmark/benchmark.h>

#include <vector>

#include "lfboot/bss_sim.hpp"
#include "lfboot/fgn.hpp"
#include "lfboot/inference.hpp"
#include "lfboot/powervar.hpp"

using namespace lfboot;

static void BM_FbmCirculant(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const FbmSampler sampler(HurstIndex(0.3), n, 1.0 / n);
    std::vector<double> x(n + 1);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        sampler.sample_into(x, ++seed);
        benchmark::DoNotOptimize(x.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FbmCirculant)->RangeMultiplier(4)->Range(64, 65536)->Complexity(benchmark::oNLogN);

static void BM_ExactPvMoments(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(exact_pv_moments(HurstIndex(0.3), n, 1.0 / n));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactPvMoments)->RangeMultiplier(10)->Range(10, 100000)->Complexity(benchmark::oN);

static void BM_LambdaAsymptotic(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(lambda_asymptotic(HurstIndex(0.9)));
}
BENCHMARK(BM_LambdaAsymptotic)->Unit(benchmark::kMillisecond);

static void BM_HybridScheme(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const GammaKernel k(-1.0 / 3, 1.0);
    const auto cfg = HybridConfig::defaults_for(k.alpha());
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_bss_hybrid(k, SV1F{}, n, cfg, ++seed));
}
BENCHMARK(BM_HybridScheme)->Arg(20)->Arg(80)->Arg(320)->Arg(1280)->Unit(benchmark::kMicrosecond);

static void BM_ExactBss(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto sampler = exact_sampler_cached(GammaKernel(0.2, 1.0), n);
    std::vector<double> x;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        sampler->sample_into(x, ++seed);
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(BM_ExactBss)->Arg(20)->Arg(320)->Unit(benchmark::kMicrosecond);

static void BM_LfbTest(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto ts = TimeSeries::unit_horizon(simulate_fbm(HurstIndex(0.5), n, 1.0 / n, 1).values);
    TestSpec spec;
    spec.bootstrap_reps = 999;
    spec.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(lfb_test(ts, spec));
}
BENCHMARK(BM_LfbTest)->Arg(20)->Arg(320)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
