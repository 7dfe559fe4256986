#include <benchmark/benchmark.h>

#include "bridgex/bayesian.hpp"
#include "bridgex/meander.hpp"
#include "bridgex/ou_extrema.hpp"

using namespace bridgex;

namespace {

const BridgeEndpoints kEp{0.0, 2.0, 3.0, 4.0, 1.0};
constexpr double kM = 5.0;

void BM_Method1(benchmark::State& st) {
    const TimeGrid grid(kEp.t1, kEp.t2, static_cast<std::size_t>(st.range(0)));
    std::uint64_t i = 0;
    for (auto _ : st) {
        RandomSource rng = RandomSource::for_path(1, i++);
        benchmark::DoNotOptimize(gen_bridge_with_max_meander(kEp, kM, grid, rng));
    }
}
BENCHMARK(BM_Method1)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_Method1PrebuiltArgmax(benchmark::State& st) {
    const TimeGrid grid(kEp.t1, kEp.t2, static_cast<std::size_t>(st.range(0)));
    const MeanderBridgeSampler sampler(kEp, kM);
    std::uint64_t i = 0;
    for (auto _ : st) {
        RandomSource rng = RandomSource::for_path(1, i++);
        benchmark::DoNotOptimize(sampler.generate(grid, rng));
    }
}
BENCHMARK(BM_Method1PrebuiltArgmax)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_Method2(benchmark::State& st) {
    const ConstraintSpec spec{kEp.t1, kEp.t2, kEp.x1, kEp.x2, kM, ExtremumKind::max};
    NumericsConfig cfg;
    cfg.n_timesteps = static_cast<std::size_t>(st.range(0));
    cfg.L = static_cast<std::size_t>(st.range(1));
    const BrownianDynamics dyn(kEp.sigma);
    std::uint64_t i = 0;
    for (auto _ : st) {
        RandomSource rng = RandomSource::for_path(1, i++);
        benchmark::DoNotOptimize(gen_constrained_bayesian(spec, dyn, cfg, rng));
    }
}
BENCHMARK(BM_Method2)->Args({100, 1000})->Args({200, 1000})->Args({100, 10000})->Unit(benchmark::kMillisecond);

void BM_VolterraSolve(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(solve_volterra_nu(-1.0, 0.9, static_cast<std::size_t>(st.range(0))));
}
BENCHMARK(BM_VolterraSolve)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_OUPrepare(benchmark::State& st) {
    const ConstraintSpec spec{0.0, 1.0, 0.0, 0.0, 1.0, ExtremumKind::max};
    NumericsConfig cfg;
    cfg.n_timesteps = 50;
    for (auto _ : st) {
        const OUDynamics dyn(OUParams{1.0, 0.0, 1.0});
        benchmark::DoNotOptimize(dyn.prepared(spec, cfg));
    }
}
BENCHMARK(BM_OUPrepare)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_OUMethod2Path(benchmark::State& st) {
    const ConstraintSpec spec{0.0, 1.0, 0.0, 0.0, 1.0, ExtremumKind::max};
    NumericsConfig cfg;
    cfg.n_timesteps = 50;
    cfg.L = 256;
    const OUDynamics dyn(OUParams{1.0, 0.0, 1.0});
    const auto prepared = dyn.prepared(spec, cfg);
    std::uint64_t i = 0;
    for (auto _ : st) {
        RandomSource rng = RandomSource::for_path(2, i++);
        benchmark::DoNotOptimize(gen_constrained_bayesian(spec, *prepared, cfg, rng));
    }
}
BENCHMARK(BM_OUMethod2Path)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
