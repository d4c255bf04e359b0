#include <benchmark/benchmark.h>

#include "reithom/cell.hpp"

using namespace reithom;

namespace {

FluxCoefficient linear_flux() {
  return make_linear_separable(1, Expression::parse("2+sin(2*pi*y1)", 'y'),
                               Expression::parse("2+sin(2*pi*z1)", 'z'));
}

FluxCoefficient p3_flux() {
  return make_phi_laplacian(1, NFunction::scaled_power(3.0), Expression::parse("1", 'y'),
                            Expression::parse("piecewise:[1,4]", 'z'));
}

TensorGrid zgrid(int n) { return make_grid(1, n, Box::unit_cell(1), BC::Periodic); }

}  // namespace

static void InnerCellLinear(benchmark::State& state) {
  const auto a = linear_flux();
  const TensorGrid g = zgrid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto sol = solve_inner_cell(a, Vec(0.25), 0.0, Vec(1.0), g);
    benchmark::DoNotOptimize(sol.averaged_flux);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(InnerCellLinear)->RangeMultiplier(2)->Range(32, 512)->Complexity();

static void InnerCellPLaplacian(benchmark::State& state) {
  const auto a = p3_flux();
  const TensorGrid g = zgrid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto sol = solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.0), g);
    benchmark::DoNotOptimize(sol.averaged_flux);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(InnerCellPLaplacian)->RangeMultiplier(2)->Range(32, 512)->Complexity();

static void OuterCellNested(benchmark::State& state) {
  const auto a = linear_flux();
  const TensorGrid g = zgrid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto sol = solve_outer_cell(a, 0.0, Vec(1.0), g, g);
    benchmark::DoNotOptimize(sol.averaged_flux);
  }
}
BENCHMARK(OuterCellNested)->RangeMultiplier(2)->Range(32, 128)->Unit(benchmark::kMillisecond);

static void InnerCellWarmStart(benchmark::State& state) {
  const auto a = p3_flux();
  const TensorGrid g = zgrid(256);
  const auto base = solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.0), g);
  std::vector<double> warm(base.corrector.values.begin(), base.corrector.values.end());
  for (auto _ : state) {
    auto sol = solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.01), g, SolveOptions{}, &warm);
    benchmark::DoNotOptimize(sol.averaged_flux);
  }
}
BENCHMARK(InnerCellWarmStart);

BENCHMARK_MAIN();
