#include <benchmark/benchmark.h>

#include "flathiggs/bundle_calculus.hpp"
#include "flathiggs/fixtures.hpp"
#include "flathiggs/random_fields.hpp"

namespace {

using namespace fh;

struct LatticeFlat {
    Connection D;
    HermitianMetric h;
};

LatticeFlat lattice_flat(int n, int grid, int rank) {
    auto base = LatticeTorus::make(n, grid);
    Rng rng(11);
    const Connection D0 = random_flat_constant(base, rng, rank);
    return {gauge(D0, smooth_gauge(base, rng, rank, 1, 0.05)), random_metric_lattice(base, rng, rank)};
}

void BM_FlatIdentities(benchmark::State& state) {
    const auto in = lattice_flat(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(flat_identities(in.D, in.h).max());
}
BENCHMARK(BM_FlatIdentities)->Args({1, 32})->Args({2, 8})->Args({2, 16})->Unit(benchmark::kMillisecond);

void BM_ToHiggs(benchmark::State& state) {
    const auto in = lattice_flat(2, static_cast<int>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(to_higgs(in.D, in.h));
}
BENCHMARK(BM_ToHiggs)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_FromHiggs(benchmark::State& state) {
    const auto in = lattice_flat(2, static_cast<int>(state.range(0)), 2);
    const HiggsOp dpp = to_higgs(in.D, in.h);
    for (auto _ : state) benchmark::DoNotOptimize(from_higgs(dpp, in.h));
}
BENCHMARK(BM_FromHiggs)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
