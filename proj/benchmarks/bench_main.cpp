#include "eisen/specfn.hpp"

#include <benchmark/benchmark.h>

using eisen::cd;
namespace sf = eisen::specfn;

static void BM_gamma(benchmark::State& state) {
    cd s(2.5, 1.5);
    for (auto _ : state) benchmark::DoNotOptimize(sf::gamma(s));
}
BENCHMARK(BM_gamma);

static void BM_zeta(benchmark::State& state) {
    cd s(2.5, 1.5);
    for (auto _ : state) benchmark::DoNotOptimize(sf::zeta(s));
}
BENCHMARK(BM_zeta);

static void BM_selberg_transform(benchmark::State& state) {
    sf::RadialKernel ker{0.55};
    cd s(2.5, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(sf::selberg_transform(ker, s));
}
BENCHMARK(BM_selberg_transform);

BENCHMARK_MAIN();
