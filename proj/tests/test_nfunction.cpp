#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest/doctest.h>

#include "reithom/nfunction.hpp"

using namespace reithom;

namespace {

// Independent closed forms for the power-log family, used as oracles.
double plog2_value(double t) { return t * t * std::log1p(t); }
double plog2_density(double t) { return 2.0 * t * std::log1p(t) + t * t / (1.0 + t); }

// Dense-grid Legendre oracle: sup of s*t - Phi(t) over a fine abscissa.
double legendre_oracle(double s, double (*phi)(double), double t_hi) {
  double best = 0.0;
  const int n = 2000000;
  for (int i = 0; i <= n; ++i) {
    const double t = t_hi * i / n;
    best = std::max(best, s * t - phi(t));
  }
  return best;
}

}  // namespace

TEST_CASE("closed-form evaluation") {
  CHECK(NFunction::power(2.0).value(3.0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(NFunction::scaled_power(2.0).value(0.0) == 0.0);
  CHECK(NFunction::power_log(2.0).value(1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("density evaluation and finite-difference consistency") {
  CHECK(NFunction::power(2.0).density(3.0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(NFunction::scaled_power(3.0).density(2.0) == doctest::Approx(4.0).epsilon(1e-15));
  // d/dt [t^2 log(1+t)] at 1 = 2 log 2 + 1/2
  const double frozen = 1.8862943611198906;
  CHECK(NFunction::power_log(2.0).density(1.0) == doctest::Approx(frozen).epsilon(1e-14));

  for (const NFunction& nf :
       {NFunction::power(2.0), NFunction::scaled_power(3.0), NFunction::power_log(2.0)}) {
    for (double t : log_grid(1e-2, 1e2, 25)) {
      const double h = 1e-6 * std::max(1.0, t);
      const double fd = (nf.value(t + h) - nf.value(t - h)) / (2.0 * h);
      const double tol = std::max(1e-6, 1e-4 * nf.density(t));
      CHECK(std::abs(fd - nf.density(t)) <= tol);
    }
  }
}

TEST_CASE("domain errors") {
  const NFunction nf = NFunction::power(2.0);
  CHECK_THROWS_AS(nf.value(-1.0), std::domain_error);
  CHECK_THROWS_AS(nf.density(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(nf.inverse(-2.0), std::domain_error);
}

TEST_CASE("conjugates of the pure power families") {
  // t^2/2 is self-conjugate.
  const auto pair2 = conjugate(NFunction::scaled_power(2.0));
  CHECK(pair2.construction == ConjugatePair::Construction::ClosedForm);
  CHECK(pair2.dual.value(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  // Legendre of t^p/p is t^q/q.
  const auto pair4 = conjugate(NFunction::scaled_power(4.0));
  CHECK(pair4.dual.value(1.0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("numerical Legendre transform matches the closed form") {
  const auto num = conjugate(NFunction::scaled_power(2.0), /*force_numerical=*/true);
  CHECK(num.construction == ConjugatePair::Construction::NumericalLegendre);
  for (int i = 0; i <= 100; ++i) {
    const double s = 10.0 * i / 100.0;
    CHECK(std::abs(num.dual.value(s) - 0.5 * s * s) <= 1e-8);
  }
  // Double conjugation returns the primal.
  const auto dd = conjugate(num.dual, true);
  for (int i = 0; i <= 100; ++i) {
    const double t = 10.0 * i / 100.0;
    CHECK(std::abs(dd.dual.value(t) - 0.5 * t * t) <= 1e-8);
  }
}

TEST_CASE("power-log conjugate against the dense-grid oracle") {
  const double oracle = legendre_oracle(1.0, &plog2_value, 4.0);
  CHECK(oracle == doctest::Approx(0.4401835333225543).epsilon(1e-9));
  const auto pair = conjugate(NFunction::power_log(2.0));
  CHECK(std::abs(pair.dual.value(1.0) - oracle) <= 1e-8);
}

TEST_CASE("Young's inequality with equality at s = phi(t)") {
  const NFunction nf = NFunction::power_log(2.0);
  const auto pair = conjugate(nf);
  for (double t : log_grid(1e-2, 10.0, 40)) {
    for (double s : log_grid(1e-2, 10.0, 40))
      CHECK(s * t <= nf.value(t) + pair.dual.value(s) + 1e-10);
    const double s_eq = nf.density(t);
    const double gap = nf.value(t) + pair.dual.value(s_eq) - s_eq * t;
    CHECK(std::abs(gap) <= 1e-8 * std::max(1.0, s_eq * t));
  }
}

TEST_CASE("complementary density inequality of the conjugate pair") {
  // conj(Phi)(phi(t)) <= t phi(t) <= Phi(2t) on a sample grid.
  for (const NFunction& nf : {NFunction::scaled_power(3.0), NFunction::power_log(2.0)}) {
    const auto pair = conjugate(nf);
    for (double t : log_grid(1e-2, 50.0, 30)) {
      const double ph = nf.density(t);
      CHECK(pair.dual.value(ph) <= t * ph * (1.0 + 1e-9));
      CHECK(t * ph <= nf.value(2.0 * t) * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("inverse") {
  CHECK(NFunction::power(2.0).inverse(9.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(NFunction::power_log(3.0).inverse(0.0) == 0.0);

  // t with t^2 log(1+t) = 1, frozen from a bisection oracle.
  const NFunction plog = NFunction::power_log(2.0);
  const double t_star = plog.inverse(1.0);
  CHECK(t_star == doctest::Approx(1.1447901016926392).epsilon(1e-10));
  CHECK(std::abs(plog2_value(t_star) - 1.0) <= 1e-10);

  for (const NFunction& nf :
       {NFunction::power(2.0), NFunction::scaled_power(3.0), NFunction::power_log(2.0)}) {
    for (double t : log_grid(1e-2, 1e3, 50)) {
      const double back = nf.inverse(nf.value(t));
      CHECK(std::abs(back - t) <= 1e-8 * std::max(1.0, t));
    }
  }
}

TEST_CASE("simonenko indices") {
  const auto grid = log_grid(1e-6, 1e6, 4096);
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto gi = simonenko_indices(NFunction::power(p), grid);
    CHECK(std::abs(gi.lower - p) <= 1e-12);
    CHECK(std::abs(gi.upper - p) <= 1e-12);
  }
  {
    const auto gi = simonenko_indices(NFunction::scaled_power(2.0), grid);
    CHECK(std::abs(gi.lower - 2.0) <= 1e-12);
    CHECK(std::abs(gi.upper - 2.0) <= 1e-12);
  }

  // Power-log ratio 2 + t/((1+t)log(1+t)) decreases from 3 to 2; the oracle
  // recomputes inf/sup over the same grid from the independent closed form.
  const auto grid_pl = log_grid(1e-3, 1e3, 4096);
  double lo = 1e300, hi = -1e300;
  for (double t : grid_pl) {
    const double ratio = t * plog2_density(t) / plog2_value(t);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const auto gi = simonenko_indices(NFunction::power_log(2.0), grid_pl);
  CHECK(gi.lower == doctest::Approx(lo).epsilon(1e-13));
  CHECK(gi.upper == doctest::Approx(hi).epsilon(1e-13));
  CHECK(gi.lower == doctest::Approx(2.144599284662991).epsilon(1e-10));
  CHECK(gi.upper == doctest::Approx(2.999500416292015).epsilon(1e-10));
  CHECK(gi.lower > 2.0);
  CHECK(gi.upper < 3.0);
  CHECK(1.0 <= gi.lower);
  CHECK(gi.lower <= gi.upper);

  CHECK_THROWS_AS(simonenko_indices(NFunction::power(2.0), std::vector<double>{}),
                  std::invalid_argument);
}

TEST_CASE("delta2 classification") {
  const auto r2 = check_delta2(NFunction::power(2.0));
  CHECK(r2.passes);
  CHECK(r2.alpha == doctest::Approx(4.0).epsilon(1e-12));

  const auto r3 = check_delta2(NFunction::scaled_power(3.0));
  CHECK(r3.passes);
  CHECK(r3.alpha == doctest::Approx(8.0).epsilon(1e-12));

  // exp(t)-t-1 via its tabulated density e^t - 1: the doubling ratio takes off
  // with the grid endpoint, so the decade rule flags it.
  std::vector<double> ts = log_grid(1e-6, 128.0, 2048);
  std::vector<double> phis;
  phis.reserve(ts.size());
  for (double t : ts) phis.push_back(std::expm1(t));
  const NFunction exp_like = NFunction::tabulated(ts, phis);
  const auto grid50 = log_grid(1.0, 50.0, 512);
  const auto rexp = check_delta2(exp_like, 1.0, grid50);
  CHECK_FALSE(rexp.passes);
  CHECK(rexp.alpha > 1e10);
}

TEST_CASE("delta-prime") {
  const auto grid = log_grid(1e-2, 1e3, 256);
  const auto rp = check_delta_prime(NFunction::power(2.0), grid);
  CHECK(rp.passes);
  CHECK(rp.c == doctest::Approx(1.0).epsilon(1e-12));
  const auto rsp = check_delta_prime(NFunction::scaled_power(2.0), grid);
  CHECK(rsp.passes);
  CHECK(rsp.c == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("domination") {
  // t^3/(kt)^2 is unbounded, so no k below sqrt(1000) works on [1, 1e3].
  const auto ks = log_grid(1.0, 16.0, 9);
  const auto ts_ge1 = log_grid(1.0, 1e3, 200);
  const auto r = check_domination(NFunction::power(2.0), NFunction::power(3.0), ks, ts_ge1);
  CHECK(r.dominates);
  CHECK(r.k == doctest::Approx(1.0));

  const auto refl = check_domination(NFunction::power(2.0), NFunction::power(2.0), ks, ts_ge1);
  CHECK(refl.dominates);
  CHECK(refl.k == doctest::Approx(1.0));

  const auto no = check_domination(NFunction::power(3.0), NFunction::power(2.0), ks, ts_ge1);
  CHECK_FALSE(no.dominates);
}

TEST_CASE("tabulated family construction rules") {
  CHECK_THROWS_AS(NFunction::tabulated({1.0, 1.0, 2.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(NFunction::tabulated({1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}), std::invalid_argument);

  // Tabulated t (density of t^2/2) reproduces the scaled power closely.
  std::vector<double> ts = log_grid(1e-6, 64.0, 1024);
  std::vector<double> phis(ts.begin(), ts.end());
  const NFunction tab = NFunction::tabulated(ts, phis);
  const NFunction ref = NFunction::scaled_power(2.0);
  for (double t : log_grid(1e-3, 32.0, 50))
    CHECK(tab.value(t) == doctest::Approx(ref.value(t)).epsilon(1e-6));
  CHECK_THROWS_AS(tab.value(1000.0), std::out_of_range);

  // Conjugate of a tabulated family: bracket failure beyond the density range.
  const auto pair = conjugate(tab);
  CHECK(pair.construction == ConjugatePair::Construction::NumericalLegendre);
  CHECK(pair.dual.value(1.0) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK_THROWS_AS(pair.dual.value(100.0), std::out_of_range);
  CHECK_THROWS_AS(pair.dual.value(-1.0), std::domain_error);
}
