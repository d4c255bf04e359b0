#include "reithom/cell.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reithom/parallel.hpp"

namespace reithom {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Generic periodic cell problem: find zero-mean nodal pi with
//   sum_q w_q flux(q, xi + D pi(q)) . D theta = 0 for all test dofs.
struct CellProblem {
  const TensorGrid& grid;
  Vec xi;
  std::function<Vec(long q, const Vec& G)> flux;
  std::function<Mat(long q, const Vec& G)> dflux;
};

struct CellResult {
  Eigen::VectorXd solution;
  Vec averaged_flux;
  double residual_norm = 0.0;
  int iterations = 0;
};

Eigen::VectorXd assemble_residual(const CellProblem& p, const Eigen::VectorXd& x) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << d;
  const double w = g.quad_weight();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(g.node_count());
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      Vec G = p.xi;
      for (int l = 0; l < nloc; ++l)
        for (int a = 0; a < d; ++a) G[a] += x[nodes[l]] * g.shape_grad(gq, l, a);
      const Vec F = p.flux(cell * qpc + gq, G);
      for (int l = 0; l < nloc; ++l) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += F[a] * g.shape_grad(gq, l, a);
        r[nodes[l]] += w * s;
      }
    }
  }
  return r;
}

// Jacobian assembled with dof 0 pinned symmetrically; the constants span the
// kernel of the unpinned matrix.
SpMat assemble_jacobian(const CellProblem& p, const Eigen::VectorXd& x) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << d;
  const double w = g.quad_weight();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(g.cell_count() * qpc * nloc * nloc + 1));
  trips.emplace_back(0, 0, 1.0);
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      Vec G = p.xi;
      for (int l = 0; l < nloc; ++l)
        for (int a = 0; a < d; ++a) G[a] += x[nodes[l]] * g.shape_grad(gq, l, a);
      const Mat M = p.dflux(cell * qpc + gq, G);
      for (int l = 0; l < nloc; ++l) {
        if (nodes[l] == 0) continue;
        for (int m = 0; m < nloc; ++m) {
          if (nodes[m] == 0) continue;
          double s = 0.0;
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
              s += g.shape_grad(gq, l, a) * M(a, b) * g.shape_grad(gq, m, b);
          trips.emplace_back(static_cast<int>(nodes[l]), static_cast<int>(nodes[m]), w * s);
        }
      }
    }
  }
  SpMat J(g.node_count(), g.node_count());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

Vec average_flux(const CellProblem& p, const Eigen::VectorXd& x) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << d;
  const double w = g.quad_weight();
  Vec sum = Vec::zero(d);
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      Vec G = p.xi;
      for (int l = 0; l < nloc; ++l)
        for (int a = 0; a < d; ++a) G[a] += x[nodes[l]] * g.shape_grad(gq, l, a);
      sum += w * p.flux(cell * qpc + gq, G);
    }
  }
  return (1.0 / g.box().volume()) * sum;
}

// One frozen-coefficient pass: replace the flux by its secant coefficient
// mu = flux(G).G/|G|^2 and solve the resulting linear problem.
Eigen::VectorXd picard_pass(const CellProblem& p, const Eigen::VectorXd& x,
                            const SolveOptions& opts) {
  const TensorGrid& g = p.grid;
  const int d = g.dim();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << d;
  const double w = g.quad_weight();
  std::vector<Eigen::Triplet<double>> trips;
  trips.emplace_back(0, 0, 1.0);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(g.node_count());
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      Vec G = p.xi;
      for (int l = 0; l < nloc; ++l)
        for (int a = 0; a < d; ++a) G[a] += x[nodes[l]] * g.shape_grad(gq, l, a);
      const Vec F = p.flux(cell * qpc + gq, G);
      const double g2 = G.dot(G);
      const double mu = g2 > 1e-28 ? std::max(F.dot(G) / g2, 1e-12) : 1.0;
      for (int l = 0; l < nloc; ++l) {
        if (nodes[l] != 0) {
          for (int m = 0; m < nloc; ++m) {
            if (nodes[m] == 0) continue;
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += g.shape_grad(gq, l, a) * g.shape_grad(gq, m, a);
            trips.emplace_back(static_cast<int>(nodes[l]), static_cast<int>(nodes[m]),
                               w * mu * s);
          }
          double b = 0.0;
          for (int a = 0; a < d; ++a) b += p.xi[a] * g.shape_grad(gq, l, a);
          rhs[nodes[l]] -= w * mu * b;
        }
      }
    }
  }
  SpMat A(g.node_count(), g.node_count());
  A.setFromTriplets(trips.begin(), trips.end());
  rhs[0] = 0.0;
  Eigen::VectorXd sol = solve_linear(A, rhs, opts.linear_solver, true);
  sol.array() -= sol.mean();
  return sol;
}

CellResult solve_cell_problem(const CellProblem& p, const SolveOptions& opts,
                              const std::vector<double>* warm) {
  detail::require(p.grid.bc() == BC::Periodic, "cell problems need a periodic grid");
  const long n = p.grid.node_count();
  Eigen::VectorXd init = Eigen::VectorXd::Zero(n);
  if (warm && static_cast<long>(warm->size()) == n)
    for (long i = 0; i < n; ++i) init[i] = (*warm)[static_cast<std::size_t>(i)];

  const ResidualFn residual = [&](const Eigen::VectorXd& x) { return assemble_residual(p, x); };
  const JacobianFn jac = [&](const Eigen::VectorXd& x) { return assemble_jacobian(p, x); };
  const SystemFixFn fix = [](SpMat&, Eigen::VectorXd& rhs) { rhs[0] = 0.0; };
  const ProjectFn project = [](Eigen::VectorXd& v) { v.array() -= v.mean(); };

  SolveOptions cell_opts = opts;
  if (cell_opts.linear_solver == LinearSolverKind::Auto)
    cell_opts.linear_solver =
        p.grid.dim() == 1 ? LinearSolverKind::DirectBanded : LinearSolverKind::ConjugateGradientILU;
  cell_opts.symmetric_hint = true;

  NewtonResult res;
  try {
    res = solve_monotone_system(residual, jac, init, cell_opts, fix, project);
  } catch (const ConvergenceError&) {
    // One restart from a frozen-coefficient pass.
    Eigen::VectorXd restart = picard_pass(p, init, cell_opts);
    res = solve_monotone_system(residual, jac, restart, cell_opts, fix, project);
  }
  res.solution.array() -= res.solution.mean();
  CellResult out;
  out.solution = std::move(res.solution);
  out.residual_norm = res.residual_norm;
  out.iterations = res.iterations;
  out.averaged_flux = average_flux(p, out.solution);
  return out;
}

ScalarField to_field(const TensorGrid& g, const Eigen::VectorXd& x) {
  ScalarField f(g);
  for (long i = 0; i < g.node_count(); ++i) f.at(i) = x[i];
  return f;
}

}  // namespace

CellSolution solve_inner_cell(const FluxCoefficient& a, const Vec& y, double r, const Vec& xi,
                              const TensorGrid& grid_Z, const SolveOptions& opts,
                              const std::vector<double>* warm_start) {
  detail::require(grid_Z.bc() == BC::Periodic, "inner cell grid must be periodic");
  detail::require(a.periodic(), "inner cell problem needs a flux periodic in z");
  detail::require(grid_Z.dim() == a.dim(), "grid/flux dimension mismatch");

  // d_lambda falls back to finite differences when no analytic Jacobian exists.
  CellProblem p{grid_Z, xi,
                [&](long q, const Vec& G) { return a(y, grid_Z.quad_coord(q), r, G); },
                [&](long q, const Vec& G) { return a.d_lambda(y, grid_Z.quad_coord(q), r, G); }};
  CellResult res = solve_cell_problem(p, opts, warm_start);
  CellSolution out;
  out.corrector = to_field(grid_Z, res.solution);
  out.frozen_y = y;
  out.frozen_r = r;
  out.frozen_xi = xi;
  out.averaged_flux = res.averaged_flux;
  out.residual_norm = res.residual_norm;
  out.iterations = res.iterations;
  return out;
}

Vec eval_h(const FluxCoefficient& a, const Vec& y, double r, const Vec& xi,
           const TensorGrid& grid_Z, const SolveOptions& opts) {
  return solve_inner_cell(a, y, r, xi, grid_Z, opts).averaged_flux;
}

namespace {

// Nested evaluation of h at the outer quadrature points with a per-quad-point
// warm-start cache; the dominant cost of the outer problem.
struct NestedH {
  const FluxCoefficient& a;
  double r;
  const TensorGrid& grid_Y;
  const TensorGrid& grid_Z;
  SolveOptions inner_opts;
  mutable std::vector<std::vector<double>> cache;  // [quad] last corrector

  NestedH(const FluxCoefficient& a, double r, const TensorGrid& gy, const TensorGrid& gz,
          const SolveOptions& opts)
      : a(a), r(r), grid_Y(gy), grid_Z(gz), inner_opts(opts) {
    cache.resize(static_cast<std::size_t>(gy.quad_count()));
  }

  Vec eval(long q, const Vec& xi_arg) const {
    const Vec y = grid_Y.quad_coord(q);
    auto& slot = cache[static_cast<std::size_t>(q)];
    CellSolution sol;
    try {
      sol = solve_inner_cell(a, y, r, xi_arg, grid_Z, inner_opts,
                             slot.empty() ? nullptr : &slot);
    } catch (const ConvergenceError& e) {
      std::ostringstream os;
      os << "inner cell solve failed at y=(" << y[0];
      if (y.dim > 1) os << "," << y[1];
      os << "): " << e.what();
      throw ConvergenceError(os.str(), e.residual, e.iterations);
    }
    slot.assign(sol.corrector.values.begin(), sol.corrector.values.end());
    return sol.averaged_flux;
  }

  Mat jacobian(long q, const Vec& xi_arg) const {
    const Vec base = eval(q, xi_arg);
    const int d = xi_arg.dim;
    Mat m;
    m.dim = d;
    for (int c = 0; c < d; ++c) {
      const double step = 1e-5 * std::max(1.0, std::abs(xi_arg[c]));
      Vec shifted = xi_arg;
      shifted[c] += step;
      const Vec forward = eval(q, shifted);
      for (int i = 0; i < d; ++i) m(i, c) = (forward[i] - base[i]) / step;
    }
    return m;
  }
};

}  // namespace

CellSolution solve_outer_cell(const FluxCoefficient& a, double r, const Vec& xi,
                              const TensorGrid& grid_Y, const TensorGrid& grid_Z,
                              const SolveOptions& opts, const std::vector<double>* warm_start) {
  detail::require(grid_Y.bc() == BC::Periodic && grid_Z.bc() == BC::Periodic,
                  "outer cell problem needs periodic grids");
  detail::require(a.periodic(), "outer cell problem needs a periodic flux");

  NestedH h(a, r, grid_Y, grid_Z, opts);
  CellProblem p{grid_Y, xi, [&](long q, const Vec& G) { return h.eval(q, G); },
                [&](long q, const Vec& G) { return h.jacobian(q, G); }};
  CellResult res = solve_cell_problem(p, opts, warm_start);
  CellSolution out;
  out.corrector = to_field(grid_Y, res.solution);
  out.frozen_r = r;
  out.frozen_xi = xi;
  out.averaged_flux = res.averaged_flux;
  out.residual_norm = res.residual_norm;
  out.iterations = res.iterations;
  return out;
}

Vec eval_q(const FluxCoefficient& a, double r, const Vec& xi, const TensorGrid& grid_Y,
           const TensorGrid& grid_Z, const SolveOptions& opts) {
  return solve_outer_cell(a, r, xi, grid_Y, grid_Z, opts).averaged_flux;
}

// ---------------------------------------------------------------------------
// Tabulation
// ---------------------------------------------------------------------------

long EffectiveFluxTable::nodes_per_slice() const {
  long n = static_cast<long>(xi_grid.size());
  return dim == 1 ? n : n * n;
}

long EffectiveFluxTable::node_count() const {
  return static_cast<long>(r_grid.size()) * nodes_per_slice();
}

long EffectiveFluxTable::flat_index(int ir, int i1, int i2) const {
  const long xn = static_cast<long>(xi_grid.size());
  return dim == 1 ? ir * xn + i1 : (ir * xn + i1) * xn + i2;
}

Vec EffectiveFluxTable::value_at(long flat) const {
  Vec v = Vec::zero(dim);
  for (int c = 0; c < dim; ++c) v[c] = values[static_cast<std::size_t>(flat * dim + c)];
  return v;
}

namespace {

std::vector<double> linear_grid(double lo, double hi, int n) {
  detail::require(n >= 2 && hi > lo, "table axis needs n >= 2 and hi > lo");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  g.back() = hi;
  return g;
}

}  // namespace

EffectiveFluxTable tabulate_q(const FluxCoefficient& a, const TensorGrid& grid_Y,
                              const TensorGrid& grid_Z, const TableOptions& topts,
                              const SolveOptions& opts) {
  detail::require(topts.xi_min < 0.0 && topts.xi_max > 0.0,
                  "xi box must contain 0 in its interior");
  const int d = a.dim();
  EffectiveFluxTable table;
  table.dim = d;
  table.r_grid = linear_grid(topts.r_min, topts.r_max, topts.r_n);
  table.xi_grid = linear_grid(topts.xi_min, topts.xi_max, topts.xi_n);
  table.values.assign(static_cast<std::size_t>(table.node_count() * d), 0.0);
  table.residuals.assign(static_cast<std::size_t>(table.node_count()), 0.0);
  {
    nlohmann::json prov;
    prov["tol"] = opts.tol;
    prov["max_iter"] = opts.max_iter;
    prov["grid_Y_n"] = grid_Y.n();
    prov["grid_Z_n"] = grid_Z.n();
    table.provenance = prov.dump();
  }

  const long per_slice = table.nodes_per_slice();
  const long xn = static_cast<long>(table.xi_grid.size());
  const int workers = worker_count(topts.workers);

  // One r-slice at a time; within a slice, workers sweep contiguous chunks and
  // warm-start from their previous node. Identical slices of r-independent
  // fluxes therefore reproduce bitwise.
  for (std::size_t ir = 0; ir < table.r_grid.size(); ++ir) {
    const double r = table.r_grid[ir];
    parallel_chunks(per_slice, workers, [&](int, long b, long e) {
      std::vector<double> warm;
      for (long k = b; k < e; ++k) {
        Vec xi = Vec::zero(d);
        xi[0] = table.xi_grid[static_cast<std::size_t>(d == 1 ? k : k / xn)];
        if (d == 2) xi[1] = table.xi_grid[static_cast<std::size_t>(k % xn)];
        CellSolution sol;
        try {
          sol = solve_outer_cell(a, r, xi, grid_Y, grid_Z, opts,
                                 warm.empty() ? nullptr : &warm);
        } catch (const ConvergenceError& err) {
          std::ostringstream os;
          os << "tabulate_q failed at r=" << r << " xi=(" << xi[0];
          if (d > 1) os << "," << xi[1];
          os << "): " << err.what();
          throw ConvergenceError(os.str(), err.residual, err.iterations);
        }
        warm.assign(sol.corrector.values.begin(), sol.corrector.values.end());
        const long flat = static_cast<long>(ir) * per_slice + k;
        for (int c = 0; c < d; ++c)
          table.values[static_cast<std::size_t>(flat * d + c)] = sol.averaged_flux[c];
        table.residuals[static_cast<std::size_t>(flat)] = sol.residual_norm;
      }
    });
  }
  return table;
}

namespace {

// Locate x on an ascending grid; returns the left index and barycentric
// fraction. Exact node hits give an exact 0/1 fraction.
bool locate_axis(const std::vector<double>& grid, double x, long& idx, double& frac) {
  if (x < grid.front() || x > grid.back()) return false;
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  long i = static_cast<long>(it - grid.begin()) - 1;
  if (i < 0) i = 0;
  if (i > static_cast<long>(grid.size()) - 2) i = static_cast<long>(grid.size()) - 2;
  idx = i;
  frac = (x - grid[static_cast<std::size_t>(i)]) /
         (grid[static_cast<std::size_t>(i + 1)] - grid[static_cast<std::size_t>(i)]);
  return true;
}

}  // namespace

bool table_contains(const EffectiveFluxTable& table, double r, const Vec& xi) {
  if (r < table.r_grid.front() || r > table.r_grid.back()) return false;
  for (int c = 0; c < table.dim; ++c)
    if (xi[c] < table.xi_grid.front() || xi[c] > table.xi_grid.back()) return false;
  return true;
}

Vec interp_q(const EffectiveFluxTable& table, double r, const Vec& xi) {
  long ir, i1, i2 = 0;
  double fr, f1, f2 = 0.0;
  if (!locate_axis(table.r_grid, r, ir, fr))
    throw TableHullError("interp_q: r outside the tabulated hull");
  if (!locate_axis(table.xi_grid, xi[0], i1, f1))
    throw TableHullError("interp_q: xi outside the tabulated hull");
  if (table.dim == 2 && !locate_axis(table.xi_grid, xi[1], i2, f2))
    throw TableHullError("interp_q: xi outside the tabulated hull");

  Vec out = Vec::zero(table.dim);
  const int corners = table.dim == 1 ? 4 : 8;
  for (int corner = 0; corner < corners; ++corner) {
    const int br = corner & 1, b1 = (corner >> 1) & 1, b2 = (corner >> 2) & 1;
    double w = (br ? fr : 1.0 - fr) * (b1 ? f1 : 1.0 - f1);
    if (table.dim == 2) w *= b2 ? f2 : 1.0 - f2;
    if (w == 0.0) continue;
    const long flat = table.flat_index(static_cast<int>(ir + br), static_cast<int>(i1 + b1),
                                       static_cast<int>(i2 + b2));
    const Vec v = table.value_at(flat);
    for (int c = 0; c < table.dim; ++c) out[c] += w * v[c];
  }
  return out;
}

void save_table(const EffectiveFluxTable& table, const std::string& csv_path,
                const std::string& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open for writing: " + csv_path);
  char buf[64];
  csv << (table.dim == 1 ? "r,xi1,q1,residual\n" : "r,xi1,xi2,q1,q2,residual\n");
  const long xn = static_cast<long>(table.xi_grid.size());
  for (long flat = 0; flat < table.node_count(); ++flat) {
    const long slice = flat / table.nodes_per_slice();
    const long rem = flat % table.nodes_per_slice();
    const double r = table.r_grid[static_cast<std::size_t>(slice)];
    const double x1 = table.xi_grid[static_cast<std::size_t>(table.dim == 1 ? rem : rem / xn)];
    std::snprintf(buf, sizeof buf, "%.17g", r);
    csv << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", x1);
    csv << buf;
    if (table.dim == 2) {
      std::snprintf(buf, sizeof buf, ",%.17g", table.xi_grid[static_cast<std::size_t>(rem % xn)]);
      csv << buf;
    }
    for (int c = 0; c < table.dim; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", table.values[static_cast<std::size_t>(flat * table.dim + c)]);
      csv << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g", table.residuals[static_cast<std::size_t>(flat)]);
    csv << buf << "\n";
  }
  nlohmann::json meta;
  meta["dim"] = table.dim;
  meta["r_grid"] = table.r_grid;
  meta["xi_grid"] = table.xi_grid;
  meta["provenance"] = table.provenance;
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot open for writing: " + json_path);
  js << meta.dump(2) << "\n";
}

EffectiveFluxTable load_table(const std::string& csv_path, const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot open: " + json_path);
  nlohmann::json meta = nlohmann::json::parse(js);
  EffectiveFluxTable table;
  table.dim = meta.at("dim").get<int>();
  table.r_grid = meta.at("r_grid").get<std::vector<double>>();
  table.xi_grid = meta.at("xi_grid").get<std::vector<double>>();
  table.provenance = meta.at("provenance").get<std::string>();
  table.values.assign(static_cast<std::size_t>(table.node_count() * table.dim), 0.0);
  table.residuals.assign(static_cast<std::size_t>(table.node_count()), 0.0);

  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open: " + csv_path);
  std::string line;
  std::getline(csv, line);
  long flat = 0;
  while (std::getline(csv, line) && flat < table.node_count()) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<double> cols;
    while (std::getline(ls, tok, ',')) cols.push_back(std::stod(tok));
    const int skip = 1 + table.dim;  // r and xi coordinates
    for (int c = 0; c < table.dim; ++c)
      table.values[static_cast<std::size_t>(flat * table.dim + c)] =
          cols[static_cast<std::size_t>(skip + c)];
    table.residuals[static_cast<std::size_t>(flat)] = cols.back();
    ++flat;
  }
  return table;
}

}  // namespace reithom
