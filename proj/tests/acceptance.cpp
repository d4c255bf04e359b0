// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "reithom/config.hpp"
#include "reithom/harness.hpp"
#include "reithom/solver.hpp"

using namespace reithom;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %2d %-28s %s [%.2f s]\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

struct CriterionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw CriterionFailure(msg);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Expression expr(const std::string& s, char letter) { return Expression::parse(s, letter); }

TensorGrid cell_grid(int n) { return make_grid(1, n, Box::unit_cell(1), BC::Periodic); }
TensorGrid omega_grid(int n) { return make_grid(1, n, Box::unit_domain(1), BC::DirichletZero); }

FluxCoefficient criterion1_flux() {
  return make_linear_separable(1, expr("2+sin(2*pi*y1)", 'y'), expr("2+sin(2*pi*z1)", 'z'));
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  criterion(1, "reiterated-harmonic-mean", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = criterion1_flux();
    // c_y(3/4) = 1, so the inner average at y = 3/4 is the plain harmonic mean.
    const auto inner = solve_inner_cell(a, Vec(0.75), 0.0, Vec(1.0), cell_grid(256));
    require(std::abs(inner.averaged_flux[0] - std::sqrt(3.0)) <= 1e-3,
            "inner effective off: " + fmt(inner.averaged_flux[0]));
    const Vec q = eval_q(a, 0.0, Vec(1.0), cell_grid(256), cell_grid(256));
    require(std::abs(q[0] - 3.0) <= 2e-3, "q off: " + fmt(q[0]));
    const double secs = elapsed(t0);
    require(secs < 5.0, "too slow: " + fmt(secs) + " s");
    return "inner=" + fmt(inner.averaged_flux[0]) + " q=" + fmt(q[0]);
  });

  criterion(2, "p-laplacian-cell-oracle", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("1", 'y'),
                                      expr("piecewise:[1,4]", 'z'));
    const auto inner = solve_inner_cell(a, Vec(0.0), 0.0, Vec(1.0), cell_grid(256));
    require(std::abs(inner.averaged_flux[0] - 16.0 / 9.0) <= 1e-3,
            "effective off: " + fmt(inner.averaged_flux[0]));
    const double secs = elapsed(t0);
    require(secs < 10.0, "too slow: " + fmt(secs) + " s");
    return "effective=" + fmt(inner.averaged_flux[0]);
  });

  criterion(3, "zero-corrector-identity", [] {
    const auto a = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("1", 'y'),
                                      expr("1", 'z'));
    const auto outer = solve_outer_cell(a, 0.7, Vec(1.4), cell_grid(64), cell_grid(64));
    double pi_inf = 0.0;
    for (double v : outer.corrector.values) pi_inf = std::max(pi_inf, std::abs(v));
    const auto inner = solve_inner_cell(a, Vec(0.0), 0.7, Vec(1.4), cell_grid(64));
    for (double v : inner.corrector.values) pi_inf = std::max(pi_inf, std::abs(v));
    require(pi_inf <= 1e-10, "corrector not flat: " + fmt(pi_inf));
    const double exact = a(Vec(0.0), Vec(0.0), 0.7, Vec(1.4))[0];
    require(std::abs(outer.averaged_flux[0] - exact) <= 1e-10,
            "q != a: " + fmt(outer.averaged_flux[0]));
    return "corrector_max=" + fmt(pi_inf);
  });

  criterion(4, "conjugate-calculus", [] {
    const auto num = conjugate(NFunction::scaled_power(2.0), /*force_numerical=*/true);
    double err1 = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double s = 10.0 * i / 1000.0;
      err1 = std::max(err1, std::abs(num.dual.value(s) - 0.5 * s * s));
    }
    require(err1 <= 1e-8, "legendre error " + fmt(err1));
    const auto dd = conjugate(num.dual, true);
    double err2 = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double t = 10.0 * i / 1000.0;
      err2 = std::max(err2, std::abs(dd.dual.value(t) - 0.5 * t * t));
    }
    require(err2 <= 1e-8, "double conjugation error " + fmt(err2));
    return "legendre_err=" + fmt(err1) + " involution_err=" + fmt(err2);
  });

  criterion(5, "growth-indices", [] {
    const auto grid = log_grid(1e-6, 1e6, 4096);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
      const auto gi = simonenko_indices(NFunction::power(p), grid);
      require(std::abs(gi.lower - p) <= 1e-12 && std::abs(gi.upper - p) <= 1e-12,
              "indices of t^" + fmt(p) + " off: (" + fmt(gi.lower) + "," + fmt(gi.upper) + ")");
    }
    return "p in {1.5, 2, 3, 4} exact";
  });

  criterion(6, "luxemburg-norms", [] {
    const TensorGrid g = omega_grid(16);
    const ScalarField u3 = sample(g, [](const Vec&) { return 3.0; });
    const ScalarField u1 = sample(g, [](const Vec&) { return 1.0; });
    const ScalarField u0 = sample(g, [](const Vec&) { return 0.0; });
    const double n3 = luxemburg_norm(u3, NFunction::power(2.0));
    const double n1 = luxemburg_norm(u1, NFunction::scaled_power(2.0));
    const double n0 = luxemburg_norm(u0, NFunction::power(2.0));
    require(std::abs(n3 - 3.0) <= 1e-9, "constant-3 norm " + fmt(n3));
    require(std::abs(n1 - 1.0 / std::sqrt(2.0)) <= 1e-9, "constant-1 norm " + fmt(n1));
    require(n0 == 0.0, "zero field norm " + fmt(n0));

    const TensorGrid gr = omega_grid(32);
    const NFunction nf = NFunction::power_log(2.0);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
      ScalarField u(gr), v(gr);
      for (long i = 0; i < gr.node_count(); ++i) {
        u.at(i) = dist(rng);
        v.at(i) = dist(rng);
      }
      const double nu = luxemburg_norm(u, nf), nv = luxemburg_norm(v, nf);
      for (double c : {0.5, 2.0, 10.0}) {
        ScalarField cu = u;
        for (double& x : cu.values) x *= c;
        require(std::abs(luxemburg_norm(cu, nf) - c * nu) <= 1e-10 * std::max(1.0, c * nu),
                "homogeneity violated");
      }
      ScalarField w = u;
      for (long i = 0; i < gr.node_count(); ++i) w.at(i) += v.at(i);
      require(luxemburg_norm(w, nf) <= nu + nv + 1e-9, "triangle inequality violated");
    }
    return "scalar cases + 100 random fields";
  });

  criterion(7, "convergence-study", [] {
    const auto t0 = std::chrono::steady_clock::now();
    StudyConfig cfg;
    cfg.dim = 1;
    cfg.flux = criterion1_flux();
    cfg.f = expr("1", 'x');
    cfg.eps_list = {0.25, 0.125, 0.0625};
    cfg.macro_n = 128;
    cfg.cell_n = 256;
    cfg.with_corrector = false;
    cfg.table.r_n = 3;
    cfg.table.xi_n = 9;
    const auto res = convergence_study(cfg);
    require(res.rows.size() == 3, "missing rows");
    for (const auto& row : res.rows) require(!row.failed, "row failed: " + row.failure);

    // sanity of the computed homogenized solution against x(1-x)/6
    double u0_err = 0.0;
    for (long node = 0; node < res.u0.grid.node_count(); ++node) {
      const double x = res.u0.grid.node_coord(node)[0];
      u0_err = std::max(u0_err, std::abs(res.u0.at(node) - x * (1.0 - x) / 6.0));
    }
    require(u0_err <= 1e-4, "computed u0 off the closed form by " + fmt(u0_err));

    require(res.rows[1].err_l2 < res.rows[0].err_l2 && res.rows[2].err_l2 < res.rows[1].err_l2,
            "err_l2 not strictly decreasing");
    require(res.rows[2].err_l2 <= 0.6 * res.rows[0].err_l2,
            "err(1/16) = " + fmt(res.rows[2].err_l2) + " > 0.6 err(1/4)");
    const double secs = elapsed(t0);
    require(secs < 120.0, "too slow: " + fmt(secs) + " s");
    return "err_l2: " + fmt(res.rows[0].err_l2) + " -> " + fmt(res.rows[1].err_l2) + " -> " +
           fmt(res.rows[2].err_l2);
  });

  criterion(8, "two-scale-pairing", [] {
    const auto gfun = [](const Vec& x, const Vec& y, const Vec& z) {
      return (1.0 + x[0]) * (2.0 + std::sin(2.0 * M_PI * y[0])) *
             (2.0 + std::cos(2.0 * M_PI * z[0]));
    };
    std::vector<SeparableTest> dict(3);
    dict[0].fx = expr("x1", 'x');
    dict[0].gy = expr("sin(2*pi*y1)", 'y');
    dict[1].gy = expr("sin(2*pi*y1)", 'y');
    dict[1].wz = expr("sin(2*pi*z1)", 'z');
    dict[2].fx = expr("1+x1", 'x');
    dict[2].gy = expr("sin(2*pi*y1)", 'y');
    dict[2].wz = expr("cos(2*pi*z1)", 'z');

    std::ostringstream note;
    for (std::size_t j = 0; j < dict.size(); ++j) {
      const auto& f = dict[j];
      const double limit = triple_integral(
          [&](const Vec& x, const Vec& y, const Vec& z) { return gfun(x, y, z) * f(x, y, z); }, 1);
      double prev = 1e300;
      for (double eps : {0.5, 0.25, 0.125}) {
        const TensorGrid g = omega_grid(resolution_cells(eps));
        const double inv_e = 1.0 / eps, inv_e2 = 1.0 / (eps * eps);
        const ScalarField ueps =
            sample(g, [&](const Vec& x) { return gfun(x, x * inv_e, x * inv_e2); });
        const double gap = std::abs(twoscale_pairing(ueps, f, eps) - limit);
        require(gap < prev, "gap not decreasing for dictionary function " + std::to_string(j + 1));
        prev = gap;
      }
      note << (j ? " " : "") << "gap" << j + 1 << "=" << fmt(prev);
    }
    return note.str();
  });

  criterion(9, "hypothesis-discrimination", [] {
    const std::vector<FluxCoefficient> builtins = {
        criterion1_flux(),
        make_linear_separable(2, expr("2+sin(2*pi*y1)", 'y'), expr("2+cos(2*pi*z2)", 'z')),
        make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("2+sin(2*pi*y1)", 'y'),
                           expr("piecewise:[1,4]", 'z')),
        make_phi_laplacian(1, NFunction::power_log(2.0), expr("1", 'y'),
                           expr("2+cos(2*pi*z1)", 'z')),
        make_degenerate(1, NFunction::scaled_power(2.0), expr("2+sin(2*pi*y1)", 'y'),
                        expr("1", 'z'), DegenerateWeight::constant(0.5))};
    for (const auto& a : builtins) {
      const auto rep = verify_hypotheses(a);
      for (const auto& e : rep.entries) {
        require(e.passed, a.family() + ": " + e.name + " failed");
        require(e.worst_margin >= -1e-9,
                a.family() + ": " + e.name + " margin " + fmt(e.worst_margin));
      }
    }

    FluxCoefficient::Setup s;
    s.dim = 1;
    s.family = "anti_monotone";
    s.eval = [](const Vec&, const Vec&, double, const Vec& lambda) { return -1.0 * lambda; };
    const auto rep = verify_hypotheses(FluxCoefficient(std::move(s)));
    require(!rep.entry("H4").passed, "anti-monotone flux passed H4");
    require(rep.entry("H4").worst_margin < 0.0, "H4 witness margin not negative");
    return "5 built-ins pass, H4 witness margin " + fmt(rep.entry("H4").worst_margin);
  });

  criterion(10, "discrete-uniqueness", [] {
    const auto a = make_phi_laplacian(1, NFunction::scaled_power(3.0), expr("1", 'y'),
                                      expr("piecewise:[1,4]", 'z'));
    TableOptions topts;
    topts.r_n = 3;
    topts.xi_n = 17;
    const auto table = tabulate_q(a, cell_grid(64), cell_grid(64), topts);
    const TensorGrid g = omega_grid(64);
    const ScalarField f = sample(g, [](const Vec&) { return 1.0; });
    SolveOptions opts;
    opts.tol = 1e-11;
    const auto from_zero = solve_macro(table, f, g, opts);
    ScalarField noisy(g);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(-0.01, 0.01);
    for (long node = 0; node < g.node_count(); ++node)
      if (!g.boundary_node(node)) noisy.at(node) = dist(rng);
    const auto from_noise = solve_macro(table, f, g, opts, &noisy);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < from_zero.u.values.size(); ++i)
      max_diff = std::max(max_diff, std::abs(from_zero.u.values[i] - from_noise.u.values[i]));
    require(max_diff <= 1e-8, "solutions differ by " + fmt(max_diff));
    return "nodal max difference " + fmt(max_diff);
  });

  criterion(11, "energy-and-apriori-bound", [] {
    const auto a = criterion1_flux();
    const NFunction phi = NFunction::scaled_power(2.0);
    SolveOptions opts;  // tol 1e-10
    std::vector<double> norms;
    std::ostringstream note;
    for (double eps : {0.25, 0.125, 0.0625}) {
      const TensorGrid g = omega_grid(resolution_cells(eps));
      const ScalarField f = sample(g, [](const Vec&) { return 1.0; });
      const auto sol = solve_fine(a, eps, f, g, opts);
      const double gap = std::abs(fine_flux_energy(a, eps, sol.u) - load_energy(f, sol.u));
      require(gap <= 10.0 * opts.tol, "energy identity gap " + fmt(gap));
      norms.push_back(orlicz_sobolev_norm(sol.u, phi));
    }
    const double lo = *std::min_element(norms.begin(), norms.end());
    const double hi = *std::max_element(norms.begin(), norms.end());
    require(hi <= 2.0 * lo, "norm band too wide: " + fmt(lo) + " .. " + fmt(hi));
    note << "norm band [" << fmt(lo) << ", " << fmt(hi) << "]";
    return note.str();
  });

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
