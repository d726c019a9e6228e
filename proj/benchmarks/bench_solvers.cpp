#include <benchmark/benchmark.h>

#include "flathiggs/correspondence.hpp"
#include "flathiggs/einstein_solver.hpp"
#include "flathiggs/fixtures.hpp"
#include "flathiggs/line_moduli.hpp"
#include "flathiggs/random_fields.hpp"

namespace {

using namespace fh;

void BM_SolveP(benchmark::State& state) {
    auto base = LatticeTorus::make(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    Rng rng(5);
    const MetricG g = smooth_metric(base, rng);
    const FormField rhs = random_metric_lattice(base, rng, 1).H();
    for (auto _ : state) benchmark::DoNotOptimize(solve_P(rhs, g).c);
}
BENCHMARK(BM_SolveP)->Args({1, 64})->Args({2, 12})->Unit(benchmark::kMillisecond);

void BM_LineEinstein(benchmark::State& state) {
    auto base = LatticeTorus::make(1, static_cast<int>(state.range(0)));
    Rng rng(7);
    const MetricG g = MetricG::with_volume(base, 1.0);
    const Connection D = gauge(random_flat_constant(base, rng, 1), smooth_gauge(base, rng, 1, 1, 0.3));
    const HermitianMetric h0 = random_metric_lattice(base, rng, 1);
    for (auto _ : state) benchmark::DoNotOptimize(line_einstein(D, g, h0).residual);
}
BENCHMARK(BM_LineEinstein)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SolveFlatConstant(benchmark::State& state) {
    auto base = LatticeTorus::make(2, 4);
    Rng rng(9);
    const MetricG g = MetricG::with_volume(base, 1.0);
    const Connection D = random_flat_constant(base, rng, static_cast<int>(state.range(0)));
    const HermitianMetric h0 = random_metric_constant(base, rng, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(solve_flat_einstein(D, g, h0).report.residual_norm);
}
BENCHMARK(BM_SolveFlatConstant)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ModuliRoundTrip(benchmark::State& state) {
    auto base = LatticeTorus::make(2, 8);
    Rng rng(13);
    const MetricG g = MetricG::with_volume(base, 1.0);
    const std::vector<Connection> samples{random_flat_constant(base, rng, 2)};
    for (auto _ : state) benchmark::DoNotOptimize(moduli_roundtrip_suite(samples, g, 13).passed);
}
BENCHMARK(BM_ModuliRoundTrip)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace
