#include "reithom/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reithom {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Dirichlet flux-form problem over interior dofs:
//   R_i = sum_q w [ F(q, r_q, xi_q) . grad theta_i - f_q theta_i ].
struct DirichletProblem {
  const TensorGrid& grid;
  std::function<Vec(long q, double r, const Vec& xi)> flux;
  std::function<Mat(long q, double r, const Vec& xi)> dflux_dxi;
  std::function<Vec(long q, double r, const Vec& xi)> dflux_dr;  // may be null
  std::function<double(long q)> load;
};

void gather_cell_state(const DirichletProblem& p, const Eigen::VectorXd& x, const long nodes[4],
                       int gq, double& r, Vec& xi) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int nloc = 1 << d;
  r = 0.0;
  xi = Vec::zero(d);
  for (int l = 0; l < nloc; ++l) {
    const long dof = g.node_to_dof(nodes[l]);
    const double v = dof >= 0 ? x[dof] : 0.0;
    r += v * g.shape_value(gq, l);
    for (int a = 0; a < d; ++a) xi[a] += v * g.shape_grad(gq, l, a);
  }
}

Eigen::VectorXd assemble_residual(const DirichletProblem& p, const Eigen::VectorXd& x) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << d;
  const double w = g.quad_weight();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(g.dof_count());
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      const long q = cell * qpc + gq;
      double rq;
      Vec xiq;
      gather_cell_state(p, x, nodes, gq, rq, xiq);
      const Vec F = p.flux(q, rq, xiq);
      const double fq = p.load(q);
      for (int l = 0; l < nloc; ++l) {
        const long dof = g.node_to_dof(nodes[l]);
        if (dof < 0) continue;
        double s = -fq * g.shape_value(gq, l);
        for (int a = 0; a < d; ++a) s += F[a] * g.shape_grad(gq, l, a);
        r[dof] += w * s;
      }
    }
  }
  return r;
}

SpMat assemble_jacobian(const DirichletProblem& p, const Eigen::VectorXd& x) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << d;
  const double w = g.quad_weight();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(g.cell_count() * qpc * nloc * nloc));
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      const long q = cell * qpc + gq;
      double rq;
      Vec xiq;
      gather_cell_state(p, x, nodes, gq, rq, xiq);
      const Mat M = p.dflux_dxi(q, rq, xiq);
      const Vec dr = p.dflux_dr ? p.dflux_dr(q, rq, xiq) : Vec::zero(d);
      for (int l = 0; l < nloc; ++l) {
        const long dof_l = g.node_to_dof(nodes[l]);
        if (dof_l < 0) continue;
        for (int m = 0; m < nloc; ++m) {
          const long dof_m = g.node_to_dof(nodes[m]);
          if (dof_m < 0) continue;
          double s = 0.0;
          for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b)
              s += g.shape_grad(gq, l, a) * M(a, b) * g.shape_grad(gq, m, b);
            s += g.shape_grad(gq, l, a) * dr[a] * g.shape_value(gq, m);
          }
          trips.emplace_back(static_cast<int>(dof_l), static_cast<int>(dof_m), w * s);
        }
      }
    }
  }
  SpMat J(g.dof_count(), g.dof_count());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

// One frozen-coefficient pass: secant coefficient mu = F.xi/|xi|^2 turns the
// problem into a linear one whose solution restarts a stalled Newton run.
Eigen::VectorXd picard_pass(const DirichletProblem& p, const Eigen::VectorXd& x,
                            const SolveOptions& opts) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << d;
  const double w = g.quad_weight();
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(g.dof_count());
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      const long q = cell * qpc + gq;
      double rq;
      Vec xiq;
      gather_cell_state(p, x, nodes, gq, rq, xiq);
      const Vec F = p.flux(q, rq, xiq);
      const double g2 = xiq.dot(xiq);
      const double mu = g2 > 1e-28 ? std::max(F.dot(xiq) / g2, 1e-12) : 1.0;
      const double fq = p.load(q);
      for (int l = 0; l < nloc; ++l) {
        const long dof_l = g.node_to_dof(nodes[l]);
        if (dof_l < 0) continue;
        rhs[dof_l] += w * fq * g.shape_value(gq, l);
        for (int m = 0; m < nloc; ++m) {
          const long dof_m = g.node_to_dof(nodes[m]);
          if (dof_m < 0) continue;
          double s = 0.0;
          for (int a = 0; a < d; ++a) s += g.shape_grad(gq, l, a) * g.shape_grad(gq, m, a);
          trips.emplace_back(static_cast<int>(dof_l), static_cast<int>(dof_m), w * mu * s);
        }
      }
    }
  }
  SpMat A(g.dof_count(), g.dof_count());
  A.setFromTriplets(trips.begin(), trips.end());
  return solve_linear(A, rhs, opts.linear_solver, true);
}

FieldSolution run_dirichlet(const DirichletProblem& p, const SolveOptions& opts,
                            const ScalarField* init, bool symmetric) {
  const TensorGrid& g = p.grid;
  detail::require(g.bc() == BC::DirichletZero, "macroscopic problems need a Dirichlet grid");
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(g.dof_count());
  if (init) {
    detail::require(init->grid.node_count() == g.node_count(), "initial guess grid mismatch");
    for (long dof = 0; dof < g.dof_count(); ++dof) x0[dof] = init->at(g.dof_to_node(dof));
  }
  SolveOptions o = opts;
  o.symmetric_hint = symmetric;
  const ResidualFn residual = [&](const Eigen::VectorXd& x) { return assemble_residual(p, x); };
  const JacobianFn jacobian = [&](const Eigen::VectorXd& x) { return assemble_jacobian(p, x); };
  NewtonResult res;
  try {
    res = solve_monotone_system(residual, jacobian, x0, o);
  } catch (const ConvergenceError&) {
    Eigen::VectorXd restart = picard_pass(p, x0, o);
    res = solve_monotone_system(residual, jacobian, std::move(restart), o);
  }

  FieldSolution out;
  out.u = ScalarField(g);
  for (long dof = 0; dof < g.dof_count(); ++dof) out.u.at(g.dof_to_node(dof)) = res.solution[dof];
  out.residual_norm = res.residual_norm;
  out.iterations = res.iterations;
  return out;
}

std::function<double(long)> field_load(const DirichletProblem& p, const ScalarField& f) {
  const TensorGrid& g = p.grid;
  detail::require(f.grid.node_count() == g.node_count(), "load field grid mismatch");
  return [&g, &f](long q) {
    const int qpc = g.quad_per_cell();
    const int nloc = 1 << g.dim();
    long nodes[4];
    g.cell_nodes(q / qpc, nodes);
    const int gq = static_cast<int>(q % qpc);
    double v = 0.0;
    for (int l = 0; l < nloc; ++l) v += f.at(nodes[l]) * g.shape_value(gq, l);
    return v;
  };
}

}  // namespace

MacroFluxSource table_source(const EffectiveFluxTable& table) {
  MacroFluxSource src;
  const EffectiveFluxTable* t = &table;
  src.q = [t](double r, const Vec& xi) {
    if (!table_contains(*t, r, xi))
      throw TableHullError(
          "macroscopic state left the tabulated (r, xi) hull; re-tabulate with a wider box");
    return interp_q(*t, r, xi);
  };
  const double r_step = 0.4 * (t->r_grid[1] - t->r_grid[0]);
  const double xi_step = 0.4 * (t->xi_grid[1] - t->xi_grid[0]);
  src.dq_dxi = [t, xi_step](double r, const Vec& xi) {
    const int d = t->dim;
    Mat m;
    m.dim = d;
    for (int c = 0; c < d; ++c) {
      Vec hi = xi, lo = xi;
      hi[c] = std::min(hi[c] + xi_step, t->xi_grid.back());
      lo[c] = std::max(lo[c] - xi_step, t->xi_grid.front());
      const Vec fp = interp_q(*t, r, hi), fm = interp_q(*t, r, lo);
      for (int i = 0; i < d; ++i) m(i, c) = (fp[i] - fm[i]) / (hi[c] - lo[c]);
    }
    return m;
  };
  src.dq_dr = [t, r_step](double r, const Vec& xi) {
    const double hi = std::min(r + r_step, t->r_grid.back());
    const double lo = std::max(r - r_step, t->r_grid.front());
    const Vec fp = interp_q(*t, hi, xi), fm = interp_q(*t, lo, xi);
    Vec g = Vec::zero(t->dim);
    if (hi > lo)
      for (int i = 0; i < t->dim; ++i) g[i] = (fp[i] - fm[i]) / (hi - lo);
    return g;
  };
  return src;
}

MacroFluxSource direct_source(const FluxCoefficient& a, const TensorGrid& grid_Y,
                              const TensorGrid& grid_Z, const SolveOptions& cell_opts) {
  MacroFluxSource src;
  src.q = [&a, &grid_Y, &grid_Z, cell_opts](double r, const Vec& xi) {
    return eval_q(a, r, xi, grid_Y, grid_Z, cell_opts);
  };
  // Derivatives by finite differences on the nested map; expensive, meant for
  // verification runs.
  src.dq_dxi = [src_q = src.q](double r, const Vec& xi) {
    const int d = xi.dim;
    Mat m;
    m.dim = d;
    for (int c = 0; c < d; ++c) {
      const double step = 1e-5 * std::max(1.0, std::abs(xi[c]));
      Vec hi = xi, lo = xi;
      hi[c] += step;
      lo[c] -= step;
      const Vec fp = src_q(r, hi), fm = src_q(r, lo);
      for (int i = 0; i < d; ++i) m(i, c) = (fp[i] - fm[i]) / (2.0 * step);
    }
    return m;
  };
  src.dq_dr = [src_q = src.q](double r, const Vec& xi) {
    const double step = 1e-5 * std::max(1.0, std::abs(r));
    const Vec fp = src_q(r + step, xi), fm = src_q(r - step, xi);
    Vec g = Vec::zero(xi.dim);
    for (int i = 0; i < xi.dim; ++i) g[i] = (fp[i] - fm[i]) / (2.0 * step);
    return g;
  };
  return src;
}

FieldSolution solve_macro(const MacroFluxSource& src, const ScalarField& f,
                          const TensorGrid& grid, const SolveOptions& opts,
                          const ScalarField* init) {
  detail::require(static_cast<bool>(src.q), "macro solve needs a flux source");
  for (double v : f.values) detail::require(std::isfinite(v), "right-hand side must be finite");
  const auto dq_dxi = src.dq_dxi
                          ? src.dq_dxi
                          : std::function<Mat(double, const Vec&)>([&src](double r, const Vec& xi) {
                              Mat m;
                              m.dim = xi.dim;
                              for (int c = 0; c < xi.dim; ++c) {
                                const double step = 1e-6 * std::max(1.0, std::abs(xi[c]));
                                Vec hi = xi, lo = xi;
                                hi[c] += step;
                                lo[c] -= step;
                                const Vec fp = src.q(r, hi), fm = src.q(r, lo);
                                for (int i = 0; i < xi.dim; ++i)
                                  m(i, c) = (fp[i] - fm[i]) / (2.0 * step);
                              }
                              return m;
                            });
  DirichletProblem p{grid,
                     [&src](long, double r, const Vec& xi) { return src.q(r, xi); },
                     [dq_dxi](long, double r, const Vec& xi) { return dq_dxi(r, xi); },
                     src.dq_dr ? std::function<Vec(long, double, const Vec&)>(
                                     [&src](long, double r, const Vec& xi) { return src.dq_dr(r, xi); })
                               : nullptr,
                     nullptr};
  p.load = field_load(p, f);
  return run_dirichlet(p, opts, init, /*symmetric=*/false);
}

FieldSolution solve_macro(const EffectiveFluxTable& table, const ScalarField& f,
                          const TensorGrid& grid, const SolveOptions& opts,
                          const ScalarField* init) {
  return solve_macro(table_source(table), f, grid, opts, init);
}

FieldSolution solve_fine(const FluxCoefficient& a, double eps, const ScalarField& f,
                         const TensorGrid& grid, const SolveOptions& opts,
                         const ScalarField* init) {
  detail::require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
  if (grid.h() > eps * eps / 8.0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "fine grid under-resolved: need h <= eps^2/8 = " << eps * eps / 8.0 << ", got h = "
       << grid.h() << "; refine the grid";
    throw std::invalid_argument(os.str());
  }
  const double inv_e = 1.0 / eps, inv_e2 = 1.0 / (eps * eps);
  const auto microscales = [&, inv_e, inv_e2](long q, Vec& y, Vec& z) {
    const Vec x = grid.quad_coord(q);
    y = x * inv_e;
    z = x * inv_e2;
  };
  DirichletProblem p{grid,
                     [&](long q, double r, const Vec& xi) {
                       Vec y, z;
                       microscales(q, y, z);
                       return a(y, z, r, xi);
                     },
                     [&](long q, double r, const Vec& xi) {
                       Vec y, z;
                       microscales(q, y, z);
                       return a.d_lambda(y, z, r, xi);
                     },
                     nullptr, nullptr};
  if (a.zeta_dependent()) {
    p.dflux_dr = [&](long q, double r, const Vec& xi) {
      Vec y, z;
      microscales(q, y, z);
      return a.d_zeta(y, z, r, xi);
    };
  }
  p.load = field_load(p, f);
  return run_dirichlet(p, opts, init, /*symmetric=*/!a.zeta_dependent());
}

namespace {

// Second-order nodal gradient recovery by central differencing the Q1
// interpolant at half the source spacing (one-sided at Dirichlet walls).
Vec recovered_gradient(const ScalarField& u, const Vec& x) {
  const double delta = 0.5 * u.grid.h();
  const Box& b = u.grid.box();
  Vec g = Vec::zero(u.grid.dim());
  for (int c = 0; c < u.grid.dim(); ++c) {
    Vec hi = x, lo = x;
    hi[c] += delta;
    lo[c] -= delta;
    if (u.grid.bc() == BC::DirichletZero) {
      hi[c] = std::min(hi[c], b.hi[c]);
      lo[c] = std::max(lo[c], b.lo[c]);
    }
    g[c] = (eval_at(u, hi) - eval_at(u, lo)) / (hi[c] - lo[c]);
  }
  return g;
}

}  // namespace

ScalarField reconstruct(const ScalarField& u0, const FluxCoefficient& a, double eps,
                        const TensorGrid& grid_out, const TensorGrid& grid_Y,
                        const TensorGrid& grid_Z, const SolveOptions& opts) {
  detail::require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
  ScalarField out(grid_out);
  const double inv_e = 1.0 / eps, inv_e2 = 1.0 / (eps * eps);
  std::vector<double> warm_outer, warm_inner;
  for (long node = 0; node < grid_out.node_count(); ++node) {
    const Vec x = grid_out.node_coord(node);
    const double r = eval_at(u0, x);
    const Vec xi = recovered_gradient(u0, x);

    CellSolution outer = solve_outer_cell(a, r, xi, grid_Y, grid_Z, opts,
                                          warm_outer.empty() ? nullptr : &warm_outer);
    warm_outer.assign(outer.corrector.values.begin(), outer.corrector.values.end());

    Vec ycell = Vec::zero(grid_out.dim()), zcell = Vec::zero(grid_out.dim());
    for (int c = 0; c < grid_out.dim(); ++c) {
      ycell[c] = detail::wrap_cell(x[c] * inv_e);
      zcell[c] = detail::wrap_cell(x[c] * inv_e2);
    }
    const double u1 = eval_at(outer.corrector, ycell);
    const Vec dy_pi1 = gradient_at(outer.corrector, ycell);

    CellSolution inner = solve_inner_cell(a, ycell, r, xi + dy_pi1, grid_Z, opts,
                                          warm_inner.empty() ? nullptr : &warm_inner);
    warm_inner.assign(inner.corrector.values.begin(), inner.corrector.values.end());
    const double u2 = eval_at(inner.corrector, zcell);

    out.at(node) = r + eps * u1 + eps * eps * u2;
  }
  return out;
}

HomogTriple::HomogTriple(ScalarField u0, FluxCoefficient a, TensorGrid grid_Y, TensorGrid grid_Z,
                         SolveOptions opts)
    : u0_(std::move(u0)), a_(std::move(a)), grid_Y_(grid_Y), grid_Z_(grid_Z), opts_(opts) {}

double HomogTriple::u1_at(const Vec& x, const Vec& y) const {
  const double r = eval_at(u0_, x);
  const Vec xi = recovered_gradient(u0_, x);
  const CellSolution outer = solve_outer_cell(a_, r, xi, grid_Y_, grid_Z_, opts_);
  return eval_at(outer.corrector, y);
}

double HomogTriple::u2_at(const Vec& x, const Vec& y, const Vec& z) const {
  const double r = eval_at(u0_, x);
  const Vec xi = recovered_gradient(u0_, x);
  const CellSolution outer = solve_outer_cell(a_, r, xi, grid_Y_, grid_Z_, opts_);
  const Vec dy_pi1 = gradient_at(outer.corrector, y);
  const CellSolution inner = solve_inner_cell(a_, y, r, xi + dy_pi1, grid_Z_, opts_);
  return eval_at(inner.corrector, z);
}

ScalarField HomogTriple::reconstruction(double eps, const TensorGrid& grid_out) const {
  return reconstruct(u0_, a_, eps, grid_out, grid_Y_, grid_Z_, opts_);
}

double fine_flux_energy(const FluxCoefficient& a, double eps, const ScalarField& u) {
  const TensorGrid& g = u.grid;
  const double w = g.quad_weight();
  const double inv_e = 1.0 / eps, inv_e2 = 1.0 / (eps * eps);
  const VectorField du = gradient(u);
  double sum = 0.0;
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << g.dim();
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      const long q = cell * qpc + gq;
      double rq = 0.0;
      for (int l = 0; l < nloc; ++l) rq += u.at(nodes[l]) * g.shape_value(gq, l);
      const Vec x = g.quad_coord(q);
      const Vec grad = du.at(q);
      sum += w * a(x * inv_e, x * inv_e2, rq, grad).dot(grad);
    }
  }
  return sum;
}

double macro_flux_energy(const MacroFluxSource& src, const ScalarField& u) {
  const TensorGrid& g = u.grid;
  const double w = g.quad_weight();
  const VectorField du = gradient(u);
  double sum = 0.0;
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << g.dim();
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      const long q = cell * qpc + gq;
      double rq = 0.0;
      for (int l = 0; l < nloc; ++l) rq += u.at(nodes[l]) * g.shape_value(gq, l);
      const Vec grad = du.at(q);
      sum += w * src.q(rq, grad).dot(grad);
    }
  }
  return sum;
}

double load_energy(const ScalarField& f, const ScalarField& u) {
  detail::require(f.grid.node_count() == u.grid.node_count(), "load_energy grid mismatch");
  const TensorGrid& g = u.grid;
  const double w = g.quad_weight();
  double sum = 0.0;
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << g.dim();
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      double fv = 0.0, uv = 0.0;
      for (int l = 0; l < nloc; ++l) {
        fv += f.at(nodes[l]) * g.shape_value(gq, l);
        uv += u.at(nodes[l]) * g.shape_value(gq, l);
      }
      sum += w * fv * uv;
    }
  }
  return sum;
}

}  // namespace reithom
