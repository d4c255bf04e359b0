#include "reithom/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "reithom/parallel.hpp"

namespace reithom {

namespace {

int next_pow2(int v) {
  int p = 2;
  while (p < v) p *= 2;
  return p;
}

}  // namespace

int resolution_cells(double eps, double extent) {
  detail::require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
  const double needed = 8.0 * extent / (eps * eps);
  return next_pow2(static_cast<int>(std::ceil(needed - 1e-12)));
}

double twoscale_pairing(const std::function<double(const Vec&)>& u, const Box& domain,
                        const SeparableTest& test, double eps) {
  detail::require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
  const int d = domain.dim();
  const int n = resolution_cells(eps, domain.extent(0));
  const TensorGrid qgrid(d, n, domain, BC::DirichletZero);
  const double w = qgrid.quad_weight();
  const double inv_e = 1.0 / eps, inv_e2 = 1.0 / (eps * eps);
  double sum = 0.0;
  for (long q = 0; q < qgrid.quad_count(); ++q) {
    const Vec x = qgrid.quad_coord(q);
    sum += w * u(x) * test(x, x * inv_e, x * inv_e2);
  }
  return sum;
}

double twoscale_pairing(const ScalarField& u, const SeparableTest& test, double eps) {
  return twoscale_pairing([&u](const Vec& x) { return eval_at(u, x); }, u.grid.box(), test, eps);
}

double triple_integral(const std::function<double(const Vec&, const Vec&, const Vec&)>& g,
                       const TensorGrid& grid_X, const TensorGrid& grid_Y,
                       const TensorGrid& grid_Z) {
  const double w = grid_X.quad_weight() * grid_Y.quad_weight() * grid_Z.quad_weight();
  double sum = 0.0;
  for (long qx = 0; qx < grid_X.quad_count(); ++qx) {
    const Vec x = grid_X.quad_coord(qx);
    for (long qy = 0; qy < grid_Y.quad_count(); ++qy) {
      const Vec y = grid_Y.quad_coord(qy);
      for (long qz = 0; qz < grid_Z.quad_count(); ++qz) sum += w * g(x, y, grid_Z.quad_coord(qz));
    }
  }
  return sum;
}

double triple_integral(const std::function<double(const Vec&, const Vec&, const Vec&)>& g,
                       int dim) {
  const int n = dim == 1 ? 32 : 8;
  const TensorGrid gx(dim, n, Box::unit_domain(dim), BC::DirichletZero);
  const TensorGrid gy(dim, n, Box::unit_cell(dim), BC::Periodic);
  const TensorGrid gz(dim, n, Box::unit_cell(dim), BC::Periodic);
  return triple_integral(g, gx, gy, gz);
}

double l2_norm(const ScalarField& u) {
  const TensorGrid& g = u.grid;
  const double w = g.quad_weight();
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << g.dim();
  long nodes[4];
  double sum = 0.0;
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      double v = 0.0;
      for (int l = 0; l < nloc; ++l) v += u.at(nodes[l]) * g.shape_value(gq, l);
      sum += w * v * v;
    }
  }
  return std::sqrt(sum);
}

double l2_gradient_norm(const ScalarField& u) {
  const VectorField du = gradient(u);
  const double w = u.grid.quad_weight();
  double sum = 0.0;
  for (long q = 0; q < u.grid.quad_count(); ++q) {
    const Vec v = du.at(q);
    sum += w * v.dot(v);
  }
  return std::sqrt(sum);
}

namespace {

ScalarField interpolate_onto(const ScalarField& src, const TensorGrid& target) {
  ScalarField out(target);
  for (long node = 0; node < target.node_count(); ++node)
    out.at(node) = eval_at(src, target.node_coord(node));
  return out;
}

ScalarField difference(const ScalarField& a, const ScalarField& b) {
  ScalarField out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  return out;
}

}  // namespace

StudyResult convergence_study(const StudyConfig& cfg) {
  detail::require(!cfg.eps_list.empty(), "study needs a nonempty eps list");
  for (std::size_t i = 1; i < cfg.eps_list.size(); ++i)
    detail::require(cfg.eps_list[i] < cfg.eps_list[i - 1], "eps list must be strictly decreasing");
  if (!cfg.fine_n.empty())
    detail::require(cfg.fine_n.size() == cfg.eps_list.size(),
                    "fine_n must match eps_list in length");

  const int d = cfg.dim;
  const Box omega = Box::unit_domain(d);
  const Box cell = Box::unit_cell(d);
  const TensorGrid grid_Y(d, cfg.cell_n, cell, BC::Periodic);
  const TensorGrid grid_Z(d, cfg.cell_n, cell, BC::Periodic);
  const TensorGrid grid_macro(d, cfg.macro_n, omega, BC::DirichletZero);

  StudyResult result;
  TableOptions topts = cfg.table;
  topts.workers = cfg.workers;
  result.table = tabulate_q(cfg.flux, grid_Y, grid_Z, topts, cfg.solver);

  const ScalarField f_macro = sample(grid_macro, [&](const Vec& x) { return cfg.f(x); });
  result.u0 = solve_macro(result.table, f_macro, grid_macro, cfg.solver).u;

  const TensorGrid grid_Yr(d, cfg.recon_cell_n, cell, BC::Periodic);
  const TensorGrid grid_Zr(d, cfg.recon_cell_n, cell, BC::Periodic);

  result.rows.assign(cfg.eps_list.size(), StudyRow{});
  const long nrows = static_cast<long>(cfg.eps_list.size());
  parallel_chunks(nrows, worker_count(cfg.workers), [&](int, long b, long e) {
    for (long i = b; i < e; ++i) {
      StudyRow& row = result.rows[static_cast<std::size_t>(i)];
      const double eps = cfg.eps_list[static_cast<std::size_t>(i)];
      row.eps = eps;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const int n_fine = cfg.fine_n.empty() ? resolution_cells(eps, omega.extent(0))
                                              : cfg.fine_n[static_cast<std::size_t>(i)];
        const TensorGrid grid_fine(d, n_fine, omega, BC::DirichletZero);
        const ScalarField f_fine = sample(grid_fine, [&](const Vec& x) { return cfg.f(x); });
        const FieldSolution fine = solve_fine(cfg.flux, eps, f_fine, grid_fine, cfg.solver);
        row.iterations = fine.iterations;

        const ScalarField u0_fine = interpolate_onto(result.u0, grid_fine);
        const ScalarField diff = difference(fine.u, u0_fine);
        row.err_l2 = l2_norm(diff);
        row.err_lux = luxemburg_norm(diff, cfg.nf);
        row.energy = fine_flux_energy(cfg.flux, eps, fine.u);

        if (cfg.with_corrector) {
          const ScalarField rec =
              reconstruct(result.u0, cfg.flux, eps, grid_fine, grid_Yr, grid_Zr, cfg.solver);
          const ScalarField cdiff = difference(fine.u, rec);
          row.err_corrector = l2_norm(cdiff) + l2_gradient_norm(cdiff);
        }

        row.pairing_gap.reserve(cfg.pairing_tests.size());
        const int nq = d == 1 ? 32 : 8;
        const TensorGrid qx(d, nq, omega, BC::DirichletZero);
        const TensorGrid qy(d, nq, cell, BC::Periodic);
        const TensorGrid qz(d, nq, cell, BC::Periodic);
        for (const auto& test : cfg.pairing_tests) {
          const double paired = twoscale_pairing(fine.u, test, eps);
          const double limit = triple_integral(
              [&](const Vec& x, const Vec& y, const Vec& z) {
                return eval_at(result.u0, x) * test(x, y, z);
              },
              qx, qy, qz);
          row.pairing_gap.push_back(std::abs(paired - limit));
        }
      } catch (const std::exception& err) {
        row.failed = true;
        row.failure = err.what();
      }
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
    }
  });

  for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
    const StudyRow& a = result.rows[i];
    const StudyRow& b = result.rows[i + 1];
    if (!a.failed && !b.failed && a.err_l2 > 0.0 && b.err_l2 > 0.0)
      result.l2_rates.push_back(std::log2(a.err_l2 / b.err_l2) /
                                std::log2(a.eps / b.eps));
  }
  return result;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json row_to_json(const StudyRow& r) {
  nlohmann::json j;
  j["eps"] = r.eps;
  j["err_lux"] = r.err_lux;
  j["err_l2"] = r.err_l2;
  j["err_corrector"] = r.err_corrector;
  j["pairing_gap"] = r.pairing_gap;
  j["energy"] = r.energy;
  j["iterations"] = r.iterations;
  j["wall_ms"] = r.wall_ms;
  j["failed"] = r.failed;
  if (r.failed) j["failure"] = r.failure;
  return j;
}

}  // namespace

void export_rows(const std::vector<StudyRow>& rows, const std::string& format,
                 const std::string& path) {
  std::size_t k = 0;
  for (const auto& r : rows) k = std::max(k, r.pairing_gap.size());

  if (format == "csv") {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "eps,err_lux,err_l2,err_corrector";
    for (std::size_t j = 0; j < k; ++j) out << ",pairing_gap_" << j + 1;
    out << ",energy,iterations,wall_ms\n";
    for (const auto& r : rows) {
      out << fmt17(r.eps) << "," << fmt17(r.err_lux) << "," << fmt17(r.err_l2) << ","
          << fmt17(r.err_corrector);
      for (std::size_t j = 0; j < k; ++j)
        out << "," << (j < r.pairing_gap.size() ? fmt17(r.pairing_gap[j]) : "nan");
      out << "," << fmt17(r.energy) << "," << r.iterations << "," << fmt17(r.wall_ms) << "\n";
    }
    return;
  }
  if (format == "json") {
    nlohmann::json doc;
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : rows) doc["rows"].push_back(row_to_json(r));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
    return;
  }
  throw std::invalid_argument("unknown export format: " + format);
}

std::vector<StudyRow> load_rows_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  std::vector<StudyRow> rows;
  for (const auto& j : doc.at("rows")) {
    StudyRow r;
    r.eps = j.at("eps").get<double>();
    r.err_lux = j.at("err_lux").get<double>();
    r.err_l2 = j.at("err_l2").get<double>();
    r.err_corrector = j.at("err_corrector").get<double>();
    r.pairing_gap = j.at("pairing_gap").get<std::vector<double>>();
    r.energy = j.at("energy").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.wall_ms = j.at("wall_ms").get<double>();
    r.failed = j.at("failed").get<bool>();
    if (r.failed) r.failure = j.at("failure").get<std::string>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace reithom
