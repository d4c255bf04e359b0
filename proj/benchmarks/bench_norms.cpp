#include <benchmark/benchmark.h>

#include <cmath>

#include "reithom/grid.hpp"

using namespace reithom;

static void LuxemburgNorm(benchmark::State& state) {
  const TensorGrid g = make_grid(1, static_cast<int>(state.range(0)), Box::unit_domain(1),
                                 BC::DirichletZero);
  const ScalarField u =
      sample(g, [](const Vec& p) { return std::sin(3.0 * p[0]) + 0.5 * p[0]; });
  const NFunction nf = NFunction::power_log(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(luxemburg_norm(u, nf));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(LuxemburgNorm)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

static void OrliczSobolevNorm(benchmark::State& state) {
  const TensorGrid g = make_grid(2, static_cast<int>(state.range(0)), Box::unit_domain(2),
                                 BC::DirichletZero);
  const ScalarField u = sample(g, [](const Vec& p) { return p[0] * (1.0 - p[0]) * p[1]; });
  const NFunction nf = NFunction::scaled_power(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(orlicz_sobolev_norm(u, nf));
}
BENCHMARK(OrliczSobolevNorm)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMillisecond);

static void NumericalLegendre(benchmark::State& state) {
  const auto pair = conjugate(NFunction::power_log(2.0));
  double s = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair.dual.value(s));
    s = s < 10.0 ? s + 0.1 : 0.1;
  }
}
BENCHMARK(NumericalLegendre);

static void GradientAssembly(benchmark::State& state) {
  const TensorGrid g = make_grid(2, static_cast<int>(state.range(0)), Box::unit_cell(2),
                                 BC::Periodic);
  const ScalarField u = sample(g, [](const Vec& p) {
    return std::sin(2.0 * M_PI * p[0]) * std::cos(2.0 * M_PI * p[1]);
  });
  for (auto _ : state) {
    VectorField v = gradient(u);
    benchmark::DoNotOptimize(v.values.data());
  }
}
BENCHMARK(GradientAssembly)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
