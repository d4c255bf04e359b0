#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <doctest/doctest.h>

#include "reithom/grid.hpp"

using namespace reithom;

TEST_CASE("dof counting") {
  const TensorGrid per1 = make_grid(1, 8, Box::unit_cell(1), BC::Periodic);
  CHECK(per1.dof_count() == 8);
  const TensorGrid dir2 = make_grid(2, 4, Box::unit_domain(2), BC::DirichletZero);
  CHECK(dir2.dof_count() == 9);
  const TensorGrid per1b = make_grid(1, 2, Box::unit_cell(1), BC::Periodic);
  CHECK(per1b.dof_count() == 2);
  CHECK(per1b.cell_volume() == doctest::Approx(0.5));
  CHECK_THROWS_AS(make_grid(3, 4, Box::unit_cell(2), BC::Periodic), std::invalid_argument);
}

TEST_CASE("quadrature partition of unity") {
  for (int dim : {1, 2}) {
    const TensorGrid g = make_grid(dim, 8, Box::unit_cell(dim), BC::Periodic);
    const ScalarField one = sample(g, [](const Vec&) { return 1.0; });
    CHECK(std::abs(integrate(one) - g.box().volume()) <= 1e-13);
  }
}

TEST_CASE("gradient of Q1 fields") {
  // constant on a periodic grid -> zero
  const TensorGrid per = make_grid(1, 16, Box::unit_cell(1), BC::Periodic);
  const ScalarField c = sample(per, [](const Vec&) { return 7.0; });
  const VectorField gc = gradient(c);
  for (long q = 0; q < per.quad_count(); ++q) CHECK(std::abs(gc.at(q)[0]) <= 1e-13);

  // nodal samples of x on a Dirichlet grid -> gradient 1 everywhere
  const TensorGrid dir = make_grid(1, 16, Box::unit_domain(1), BC::DirichletZero);
  const ScalarField lin = sample(dir, [](const Vec& p) { return p[0]; });
  const VectorField gl = gradient(lin);
  for (long q = 0; q < dir.quad_count(); ++q)
    CHECK(gl.at(q)[0] == doctest::Approx(1.0).epsilon(1e-13));

  // sin(2 pi y) at n=64: the cell-constant gradient equals the derivative at
  // the cell center to O(n^-2); refining confirms the order.
  double err64 = 0.0, err128 = 0.0;
  for (int n : {64, 128}) {
    const TensorGrid g = make_grid(1, n, Box::unit_cell(1), BC::Periodic);
    const ScalarField s = sample(g, [](const Vec& p) { return std::sin(2.0 * M_PI * p[0]); });
    const VectorField gs = gradient(s);
    double err = 0.0;
    for (long cell = 0; cell < g.cell_count(); ++cell) {
      const double xc = g.box().lo[0] + (cell + 0.5) * g.h();
      const double got = gs.at(cell * g.quad_per_cell())[0];
      err = std::max(err, std::abs(got - 2.0 * M_PI * std::cos(2.0 * M_PI * xc)));
    }
    (n == 64 ? err64 : err128) = err;
  }
  CHECK(err64 < 0.01);
  CHECK(err128 < err64 / 3.0);
}

TEST_CASE("integrate") {
  const TensorGrid g = make_grid(1, 64, Box::unit_cell(1), BC::Periodic);
  const ScalarField s = sample(g, [](const Vec& p) { return std::sin(2.0 * M_PI * p[0]); });
  CHECK(std::abs(integrate(s)) <= 1e-12);
  const ScalarField y2 = sample(g, [](const Vec& p) { return p[0] * p[0]; });
  CHECK(integrate(y2) == doctest::Approx(1.0 / 12.0).epsilon(1e-4));
}

TEST_CASE("zero-mean projection") {
  const TensorGrid g = make_grid(1, 32, Box::unit_cell(1), BC::Periodic);
  const ScalarField c5 = sample(g, [](const Vec&) { return 5.0; });
  const ScalarField pc5 = zero_mean_project(c5);
  for (double v : pc5.values) CHECK(std::abs(v) <= 1e-13);

  const ScalarField s = sample(g, [](const Vec& p) { return std::sin(2.0 * M_PI * p[0]); });
  const ScalarField ps = zero_mean_project(s);
  for (std::size_t i = 0; i < s.values.size(); ++i)
    CHECK(ps.values[i] == doctest::Approx(s.values[i]).epsilon(1e-12));

  const ScalarField shifted = sample(g, [](const Vec& p) { return 1.0 + std::sin(2.0 * M_PI * p[0]); });
  const ScalarField pshift = zero_mean_project(shifted);
  CHECK(std::abs(integrate(pshift)) <= 1e-13);
  for (std::size_t i = 0; i < s.values.size(); ++i)
    CHECK(pshift.values[i] == doctest::Approx(s.values[i]).epsilon(1e-10));

  // gradient is shift invariant
  const VectorField g1 = gradient(shifted);
  const VectorField g2 = gradient(pshift);
  for (std::size_t i = 0; i < g1.values.size(); ++i)
    CHECK(g1.values[i] == doctest::Approx(g2.values[i]).epsilon(1e-12));

  const TensorGrid dir = make_grid(1, 8, Box::unit_domain(1), BC::DirichletZero);
  CHECK_THROWS_AS(zero_mean_project(ScalarField(dir)), std::invalid_argument);
}

TEST_CASE("luxemburg norm scalar cases") {
  const TensorGrid g = make_grid(1, 16, Box::unit_domain(1), BC::DirichletZero);
  const ScalarField u3 = sample(g, [](const Vec&) { return 3.0; });
  CHECK(luxemburg_norm(u3, NFunction::power(2.0)) == doctest::Approx(3.0).epsilon(1e-9));
  const ScalarField u1 = sample(g, [](const Vec&) { return 1.0; });
  CHECK(luxemburg_norm(u1, NFunction::scaled_power(2.0)) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  const ScalarField u0 = sample(g, [](const Vec&) { return 0.0; });
  CHECK(luxemburg_norm(u0, NFunction::power(2.0)) == 0.0);

  ScalarField bad = u1;
  bad.values[3] = std::nan("");
  CHECK_THROWS_AS(luxemburg_norm(bad, NFunction::power(2.0)), std::domain_error);
}

TEST_CASE("luxemburg norm properties on random fields") {
  const TensorGrid g = make_grid(1, 32, Box::unit_domain(1), BC::DirichletZero);
  const NFunction nf = NFunction::power_log(2.0);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    ScalarField u(g), v(g);
    for (long i = 0; i < g.node_count(); ++i) {
      u.at(i) = dist(rng);
      v.at(i) = dist(rng);
    }
    const double nu = luxemburg_norm(u, nf);
    const double nv = luxemburg_norm(v, nf);

    // absolute homogeneity
    for (double cscale : {0.5, 2.0, 10.0}) {
      ScalarField cu = u;
      for (double& x : cu.values) x *= cscale;
      CHECK(std::abs(luxemburg_norm(cu, nf) - cscale * nu) <= 1e-10 * std::max(1.0, cscale * nu));
    }

    // triangle inequality
    ScalarField w = u;
    for (long i = 0; i < g.node_count(); ++i) w.at(i) += v.at(i);
    CHECK(luxemburg_norm(w, nf) <= nu + nv + 1e-9);
  }
}

TEST_CASE("luxemburg norm equals L2 for the power-2 family on a unit box") {
  const TensorGrid g = make_grid(1, 64, Box::unit_domain(1), BC::DirichletZero);
  const ScalarField u = sample(g, [](const Vec& p) { return p[0] * (1.0 - p[0]); });
  // discrete L2 of the interpolant
  double l2 = 0.0;
  {
    const double w = g.quad_weight();
    for (long q = 0; q < g.quad_count(); ++q) {
      const double v = eval_at(u, g.quad_coord(q));
      l2 += w * v * v;
    }
    l2 = std::sqrt(l2);
  }
  CHECK(luxemburg_norm(u, NFunction::power(2.0)) == doctest::Approx(l2).epsilon(1e-9));
}

TEST_CASE("luxemburg norm of a vector field uses the pointwise magnitude") {
  const TensorGrid g = make_grid(2, 8, Box::unit_domain(2), BC::DirichletZero);
  // constant gradient (3, 4): magnitude 5 everywhere
  const ScalarField u = sample(g, [](const Vec& p) { return 3.0 * p[0] + 4.0 * p[1]; });
  const VectorField du = gradient(u);
  CHECK(luxemburg_norm(du, NFunction::power(2.0)) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("orlicz-sobolev norm") {
  const TensorGrid g = make_grid(1, 128, Box::unit_domain(1), BC::DirichletZero);
  const ScalarField zero(g);
  CHECK(orlicz_sobolev_norm(zero, NFunction::power(2.0)) == 0.0);

  const TensorGrid per = make_grid(1, 32, Box::unit_cell(1), BC::Periodic);
  const ScalarField c3 = sample(per, [](const Vec&) { return 3.0; });
  CHECK(orlicz_sobolev_norm(c3, NFunction::power(2.0)) == doctest::Approx(3.0).epsilon(1e-9));

  // ||x(1-x)||_2 + ||1-2x||_2 = sqrt(1/30) + sqrt(1/3)
  const ScalarField u = sample(g, [](const Vec& p) { return p[0] * (1.0 - p[0]); });
  const double analytic = std::sqrt(1.0 / 30.0) + std::sqrt(1.0 / 3.0);
  CHECK(std::abs(orlicz_sobolev_norm(u, NFunction::power(2.0)) - analytic) <= 1e-3);
}

TEST_CASE("field csv round-trip") {
  const TensorGrid g = make_grid(2, 6, Box::unit_domain(2), BC::DirichletZero);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField u(g);
  for (double& v : u.values) v = dist(rng);

  const std::string csv = "/tmp/reithom_field.csv", js = "/tmp/reithom_field.json";
  save_field(u, csv, js);
  const ScalarField back = load_field(csv, js);
  REQUIRE(back.values.size() == u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i) CHECK(back.values[i] == u.values[i]);
  CHECK(back.grid.n() == g.n());
  CHECK(back.grid.dim() == g.dim());
  std::remove(csv.c_str());
  std::remove(js.c_str());
}

TEST_CASE("interpolation wraps periodically") {
  const TensorGrid g = make_grid(1, 32, Box::unit_cell(1), BC::Periodic);
  const ScalarField s = sample(g, [](const Vec& p) { return std::sin(2.0 * M_PI * p[0]); });
  CHECK(eval_at(s, Vec(0.25)) == doctest::Approx(eval_at(s, Vec(1.25))).epsilon(1e-12));
  CHECK(eval_at(s, Vec(-0.125)) == doctest::Approx(eval_at(s, Vec(0.875))).epsilon(1e-12));
}
