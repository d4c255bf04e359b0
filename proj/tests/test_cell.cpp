#include <cmath>
#include <stdexcept>

#include <doctest/doctest.h>

#include "reithom/cell.hpp"

using namespace reithom;

namespace {

Expression expr(const std::string& s, char letter) { return Expression::parse(s, letter); }

TensorGrid cell_grid(int dim, int n) { return make_grid(dim, n, Box::unit_cell(dim), BC::Periodic); }

// 1D effective coefficient of a linear layered flux: the harmonic mean
// (integral of 1/c)^{-1}, computed by composite Simpson.
double harmonic_mean_oracle(const Expression& c, int n = 40001) {
  double sum = 0.0;
  const double h = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double z = -0.5 + i * h;
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w / c(Vec(z));
  }
  sum *= h / 3.0;
  return 1.0 / sum;
}

}  // namespace

TEST_CASE("z-independent flux has a zero corrector") {
  const auto a = make_linear_separable(1, expr("2+sin(2*pi*y1)", 'y'), expr("1", 'z'));
  const auto sol = solve_inner_cell(a, Vec(0.25), 0.0, Vec(1.0), cell_grid(1, 64));
  for (double v : sol.corrector.values) CHECK(std::abs(v) <= 1e-12);
  CHECK(sol.averaged_flux[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sol.iterations == 0);
}

TEST_CASE("1D harmonic mean oracle: sqrt(3)") {
  const Expression cz = expr("2+sin(2*pi*z1)", 'z');
  const double oracle = harmonic_mean_oracle(cz);
  CHECK(oracle == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));

  const auto a = make_linear_separable(1, expr("1", 'y'), cz);
  const auto sol = solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.0), cell_grid(1, 256));
  CHECK(std::abs(sol.averaged_flux[0] - std::sqrt(3.0)) <= 1e-3);
  CHECK(std::abs(integrate(sol.corrector)) <= 1e-12);
  CHECK(sol.residual_norm <= 1e-10);
}

TEST_CASE("1D p-Laplacian piecewise oracle: 16/9") {
  // effective = (cell average of c^{-1/(p-1)})^{-(p-1)}, p = 3
  const double oracle = std::pow(0.5 * (1.0 + std::pow(4.0, -0.5)), -2.0);
  CHECK(oracle == doctest::Approx(16.0 / 9.0).epsilon(1e-12));

  const auto a = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("1", 'y'),
                                    expr("piecewise:[1,4]", 'z'));
  const auto sol = solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.0), cell_grid(1, 256));
  CHECK(std::abs(sol.averaged_flux[0] - 16.0 / 9.0) <= 1e-3);
}

TEST_CASE("mesh convergence of the sqrt(3) oracle") {
  const auto a = make_linear_separable(1, expr("1", 'y'), expr("2+sin(2*pi*z1)", 'z'));
  double prev_err = 1e300;
  double prev_order_base = 0.0;
  for (int n : {32, 64, 128, 256}) {
    const auto sol = solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.0), cell_grid(1, n));
    const double err = std::abs(sol.averaged_flux[0] - std::sqrt(3.0));
    CHECK(err < prev_err);
    if (prev_order_base > 0.0) {
      const double order = std::log2(prev_order_base / err);
      CHECK(order >= 1.5);
    }
    prev_order_base = err;
    prev_err = err;
  }
}

TEST_CASE("discrete weak-form residual is below tolerance") {
  const auto a = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("1", 'y'),
                                    expr("2+cos(2*pi*z1)", 'z'));
  SolveOptions opts;
  opts.tol = 1e-11;
  const auto sol = solve_inner_cell(a, Vec(0.0), 0.3, Vec(0.7), cell_grid(1, 128), opts);
  CHECK(sol.residual_norm <= 1e-11);

  // monotone-flux energy identity: integral a(G).G >= theta integral Phi(|G|)
  const TensorGrid g = cell_grid(1, 128);
  const VectorField dpi = gradient(sol.corrector);
  double lhs = 0.0, rhs = 0.0;
  for (long q = 0; q < g.quad_count(); ++q) {
    Vec G = Vec(0.7) + dpi.at(q);
    lhs += g.quad_weight() * a(Vec(0.0), g.quad_coord(q), 0.3, G).dot(G);
    rhs += g.quad_weight() * a.phi().value(G.norm());
  }
  CHECK(lhs >= a.theta() * rhs - 1e-10);
}

TEST_CASE("eval_h linearity and zero-at-zero") {
  const auto a = make_linear_separable(1, expr("2+sin(2*pi*y1)", 'y'), expr("2+cos(2*pi*z1)", 'z'));
  const TensorGrid gz = cell_grid(1, 64);
  const Vec h1 = eval_h(a, Vec(0.2), 0.0, Vec(1.0), gz);
  const Vec h2 = eval_h(a, Vec(0.2), 0.0, Vec(2.0), gz);
  CHECK(std::abs(h2[0] - 2.0 * h1[0]) <= 1e-9);
  CHECK(eval_h(a, Vec(0.2), 0.0, Vec(0.0), gz).norm() <= 1e-12);

  const auto p3 = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("1", 'y'),
                                     expr("piecewise:[1,4]", 'z'));
  CHECK(eval_h(p3, Vec(0.0), 0.0, Vec(0.0), gz).norm() <= 1e-12);
}

TEST_CASE("outer problem with constant flux collapses") {
  const auto a = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("1", 'y'), expr("1", 'z'));
  const auto sol = solve_outer_cell(a, 0.4, Vec(1.3), cell_grid(1, 32), cell_grid(1, 32));
  for (double v : sol.corrector.values) CHECK(std::abs(v) <= 1e-10);
  // q(r, xi) = a(xi) = |xi| xi
  CHECK(sol.averaged_flux[0] == doctest::Approx(1.3 * 1.3).epsilon(1e-10));
}

TEST_CASE("reiterated harmonic mean: q = 3") {
  const auto a = make_linear_separable(1, expr("2+sin(2*pi*y1)", 'y'), expr("2+sin(2*pi*z1)", 'z'));
  const auto sol = solve_outer_cell(a, 0.0, Vec(1.0), cell_grid(1, 256), cell_grid(1, 256));
  CHECK(std::abs(sol.averaged_flux[0] - 3.0) <= 2e-3);
  CHECK(std::abs(integrate(sol.corrector)) <= 1e-12);
}

TEST_CASE("single oscillating scale: inner correctors vanish") {
  const auto a = make_linear_separable(1, expr("2+sin(2*pi*y1)", 'y'), expr("1", 'z'));
  const auto sol = solve_outer_cell(a, 0.0, Vec(1.0), cell_grid(1, 256), cell_grid(1, 16));
  CHECK(std::abs(sol.averaged_flux[0] - std::sqrt(3.0)) <= 1e-3);
}

TEST_CASE("2D layered coefficient: harmonic across, arithmetic along") {
  const auto a = make_linear_separable(2, expr("1", 'y'), expr("2+sin(2*pi*z1)", 'z'));
  const TensorGrid gz = cell_grid(2, 32);
  const auto across = solve_inner_cell(a, Vec(0.0, 0.0), 0.0, Vec(1.0, 0.0), gz);
  CHECK(std::abs(across.averaged_flux[0] - std::sqrt(3.0)) <= 2e-3);
  CHECK(std::abs(across.averaged_flux[1]) <= 1e-10);
  const auto along = solve_inner_cell(a, Vec(0.0, 0.0), 0.0, Vec(0.0, 1.0), gz);
  CHECK(std::abs(along.averaged_flux[1] - 2.0) <= 2e-3);
  CHECK(std::abs(along.averaged_flux[0]) <= 1e-10);
}

TEST_CASE("usage errors") {
  const auto a = make_linear_separable(1, expr("1", 'y'), expr("1", 'z'));
  const TensorGrid dir = make_grid(1, 16, Box::unit_domain(1), BC::DirichletZero);
  CHECK_THROWS_AS(solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.0), dir), std::invalid_argument);
}

TEST_CASE("tabulate and interpolate a linear flux table") {
  const auto a = make_linear_separable(1, expr("2+sin(2*pi*y1)", 'y'), expr("2+sin(2*pi*z1)", 'z'));
  TableOptions topts;
  topts.r_n = 3;
  topts.xi_n = 5;
  const TensorGrid gy = cell_grid(1, 64), gz = cell_grid(1, 64);
  const auto table = tabulate_q(a, gy, gz, topts);

  // r-independent flux: slices identical bitwise
  const long per = table.nodes_per_slice();
  for (long k = 0; k < per; ++k) {
    CHECK(table.values[static_cast<std::size_t>(k)] ==
          table.values[static_cast<std::size_t>(per + k)]);
    CHECK(table.values[static_cast<std::size_t>(k)] ==
          table.values[static_cast<std::size_t>(2 * per + k)]);
  }

  // zero-at-zero column
  const Vec q0 = interp_q(table, 0.0, Vec(0.0));
  CHECK(std::abs(q0[0]) <= 1e-12);

  // node queries reproduce node values exactly
  for (int ir = 0; ir < topts.r_n; ++ir)
    for (int i1 = 0; i1 < topts.xi_n; ++i1) {
      const Vec v = interp_q(table, table.r_grid[ir], Vec(table.xi_grid[i1]));
      CHECK(v[0] == table.value_at(table.flat_index(ir, i1))[0]);
    }

  // linear in xi: the interpolant is exact at midpoints
  for (int i1 = 0; i1 + 1 < topts.xi_n; ++i1) {
    const double xi_mid = 0.5 * (table.xi_grid[i1] + table.xi_grid[i1 + 1]);
    const Vec via_table = interp_q(table, 0.0, Vec(xi_mid));
    const Vec direct = eval_q(a, 0.0, Vec(xi_mid), gy, gz);
    CHECK(std::abs(via_table[0] - direct[0]) <= 1e-6);
  }

  // monotonicity shadow: q nondecreasing in xi for a strongly monotone family
  for (long k = 0; k + 1 < static_cast<long>(table.xi_grid.size()); ++k)
    CHECK(table.value_at(k)[0] <= table.value_at(k + 1)[0] + 1e-12);

  CHECK_THROWS_AS(interp_q(table, 0.0, Vec(99.0)), TableHullError);
  CHECK_THROWS_AS(interp_q(table, 99.0, Vec(0.0)), TableHullError);
}

TEST_CASE("table round-trips through csv + json") {
  const auto a = make_linear_separable(1, expr("1", 'y'), expr("2+cos(2*pi*z1)", 'z'));
  TableOptions topts;
  topts.r_n = 2;
  topts.xi_n = 3;
  const auto table = tabulate_q(a, cell_grid(1, 32), cell_grid(1, 32), topts);
  save_table(table, "/tmp/reithom_table.csv", "/tmp/reithom_table.json");
  const auto back = load_table("/tmp/reithom_table.csv", "/tmp/reithom_table.json");
  REQUIRE(back.values.size() == table.values.size());
  for (std::size_t i = 0; i < table.values.size(); ++i) CHECK(back.values[i] == table.values[i]);
  CHECK(back.r_grid == table.r_grid);
  CHECK(back.xi_grid == table.xi_grid);
  std::remove("/tmp/reithom_table.csv");
  std::remove("/tmp/reithom_table.json");
}

TEST_CASE("2D table round-trip and interpolation") {
  const auto a = make_linear_separable(2, expr("1", 'y'), expr("2+sin(2*pi*z1)", 'z'));
  TableOptions topts;
  topts.r_n = 2;
  topts.xi_n = 3;
  const TensorGrid gy = make_grid(2, 8, Box::unit_cell(2), BC::Periodic);
  const TensorGrid gz = make_grid(2, 8, Box::unit_cell(2), BC::Periodic);
  const auto table = tabulate_q(a, gy, gz, topts);

  for (int ir = 0; ir < topts.r_n; ++ir)
    for (int i1 = 0; i1 < topts.xi_n; ++i1)
      for (int i2 = 0; i2 < topts.xi_n; ++i2) {
        const Vec v = interp_q(table, table.r_grid[ir],
                               Vec(table.xi_grid[i1], table.xi_grid[i2]));
        const Vec node = table.value_at(table.flat_index(ir, i1, i2));
        CHECK(v[0] == node[0]);
        CHECK(v[1] == node[1]);
      }

  // linear flux: interpolation at an interior point matches direct evaluation
  const Vec probe(0.7, -0.9);
  const Vec via = interp_q(table, 0.0, probe);
  const Vec direct = eval_q(a, 0.0, probe, gy, gz);
  CHECK(std::abs(via[0] - direct[0]) <= 1e-6);
  CHECK(std::abs(via[1] - direct[1]) <= 1e-6);

  save_table(table, "/tmp/reithom_t2.csv", "/tmp/reithom_t2.json");
  const auto back = load_table("/tmp/reithom_t2.csv", "/tmp/reithom_t2.json");
  CHECK(back.dim == 2);
  for (std::size_t i = 0; i < table.values.size(); ++i) CHECK(back.values[i] == table.values[i]);
  std::remove("/tmp/reithom_t2.csv");
  std::remove("/tmp/reithom_t2.json");
}

TEST_CASE("tabulation is deterministic across worker counts") {
  const auto a = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("2+sin(2*pi*y1)", 'y'),
                                    expr("1", 'z'));
  TableOptions t1, t4;
  t1.r_n = t4.r_n = 2;
  t1.xi_n = t4.xi_n = 5;
  t1.workers = 1;
  t4.workers = 4;
  const auto a_t1 = tabulate_q(a, cell_grid(1, 32), cell_grid(1, 32), t1);
  const auto a_t4 = tabulate_q(a, cell_grid(1, 32), cell_grid(1, 32), t4);
  // Same values up to solver tolerance; chunk boundaries shift warm starts.
  REQUIRE(a_t1.values.size() == a_t4.values.size());
  for (std::size_t i = 0; i < a_t1.values.size(); ++i)
    CHECK(std::abs(a_t1.values[i] - a_t4.values[i]) <= 1e-8);
  // And bit-identical when repeated with the same worker count.
  const auto b_t4 = tabulate_q(a, cell_grid(1, 32), cell_grid(1, 32), t4);
  for (std::size_t i = 0; i < a_t4.values.size(); ++i) CHECK(a_t4.values[i] == b_t4.values[i]);
}
