#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "reithom/config.hpp"
#include "reithom/harness.hpp"
#include "reithom/solver.hpp"

using namespace reithom;

namespace {

struct StrictHypothesisFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliExit {
  int code;
};

double wall_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

Vec vec_from(const std::vector<double>& v, int dim) {
  detail::require(static_cast<int>(v.size()) == dim, "component count must match the dimension");
  return dim == 1 ? Vec(v[0]) : Vec(v[0], v[1]);
}

void write_manifest(const std::string& path, const nlohmann::json& extra,
                    const SolveOptions& opts, double wall_ms) {
  nlohmann::json m = extra;
  m["options"] = {{"tol", opts.tol}, {"max_iter", opts.max_iter}};
  m["wall_ms"] = wall_ms;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << m.dump(2) << "\n";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void run_nf_check(const std::string& family, double p, const std::string& csv) {
  NFunction nf = family == "tabulated"
                     ? load_tabulated_csv(csv)
                     : nf_from_json(nlohmann::json{{"family", family}, {"p", p}});
  std::cout << "family: " << nf.describe() << "\n";

  const auto grid = log_grid(1e-6, 1e6, 4096);
  std::vector<double> safe;
  for (double t : grid) {
    try {
      nf.value(2.0 * t);
      safe.push_back(t);
    } catch (const std::out_of_range&) {
      break;  // tabulated abscissa ends here
    }
  }
  const auto gi = simonenko_indices(nf, safe);
  std::cout << "simonenko indices: (" << fmt(gi.lower) << ", " << fmt(gi.upper) << ")\n";

  std::vector<double> d2grid;
  for (double t : safe)
    if (t >= 1.0) d2grid.push_back(t);
  const auto d2 = check_delta2(nf, 1.0, d2grid);
  std::cout << "delta2: alpha = " << fmt(d2.alpha) << ", " << (d2.passes ? "passes" : "fails")
            << "\n";

  const auto pair = conjugate(nf);
  std::cout << "conjugate construction: "
            << (pair.construction == ConjugatePair::Construction::ClosedForm
                    ? "closed form"
                    : "numerical legendre")
            << "\n";
  double young_violation = 0.0;
  for (double t : log_grid(1e-2, 10.0, 20))
    for (double s : log_grid(1e-2, 10.0, 20))
      young_violation = std::max(young_violation, s * t - nf.value(t) - pair.dual.value(s));
  std::cout << "young violation on samples: " << fmt(young_violation) << "\n";
  std::cout << "conjugate at 1: " << fmt(pair.dual.value(1.0)) << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"reiterated periodic homogenization toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_prefix = "reithom_out", family = "scaled_power", csv_path;
  std::string level = "inner", format = "csv", table_prefix;
  double p = 2.0, r_frozen = 0.0, eps = 0.25;
  int n_override = 0, points = 200;
  std::uint64_t seed = 1234;
  bool strict = false, direct = false, plot_data = false;
  std::vector<double> xi_components{1.0}, y_components;

  auto* nf_check = app.add_subcommand("nf-check", "growth indices, doubling and conjugate checks");
  nf_check->add_option("--family", family, "power|scaled_power|power_log|tabulated");
  nf_check->add_option("--p", p, "exponent for the power families");
  nf_check->add_option("--csv", csv_path, "two-column density CSV for tabulated");

  auto* verify = app.add_subcommand("verify-flux", "sample the structural hypotheses");
  verify->add_option("--config", config_path, "JSON config with a flux block")->required();
  verify->add_flag("--strict", strict, "exit 4 when a hypothesis fails");
  verify->add_option("--points", points, "sample count");
  verify->add_option("--seed", seed, "sampler seed");

  auto* cellcmd = app.add_subcommand("solve-cell", "solve one inner or outer cell problem");
  cellcmd->add_option("--config", config_path)->required();
  cellcmd->add_option("--level", level, "inner|outer");
  cellcmd->add_option("--xi", xi_components, "frozen gradient components");
  cellcmd->add_option("--r", r_frozen, "frozen state value");
  cellcmd->add_option("--y", y_components, "frozen slow variable (inner level)");
  cellcmd->add_option("--n", n_override, "cells per axis override");
  cellcmd->add_option("--out", out_prefix, "prefix for the corrector field files");

  auto* tab = app.add_subcommand("tabulate", "tabulate the effective flux q(r, xi)");
  tab->add_option("--config", config_path)->required();
  tab->add_option("--out", out_prefix);

  auto* macro = app.add_subcommand("macro", "solve the homogenized problem");
  macro->add_option("--config", config_path)->required();
  macro->add_option("--out", out_prefix);
  macro->add_option("--table", table_prefix, "prefix of a saved table (csv/json)");
  macro->add_flag("--direct", direct, "nested cell evaluation instead of a table");

  auto* fine = app.add_subcommand("fine", "solve the oscillating fine-scale problem");
  fine->add_option("--config", config_path)->required();
  fine->add_option("--eps", eps, "scale parameter")->required();
  fine->add_option("--n", n_override, "cells override (default: resolution rule)");
  fine->add_option("--out", out_prefix);

  auto* study = app.add_subcommand("study", "run a convergence study");
  study->add_option("--config", config_path)->required();
  study->add_option("--out", out_prefix);
  study->add_option("--format", format, "csv|json");
  study->add_flag("--plot-data", plot_data, "also write eps-vs-error two-column files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    throw CliExit{code == 0 ? 0 : 2};
  }

  const auto t0 = std::chrono::steady_clock::now();

  if (*nf_check) {
    run_nf_check(family, p, csv_path);
    return 0;
  }

  if (*verify) {
    const auto doc = load_json_file(config_path);
    const int dim = doc.value("dim", 1);
    const auto flux = flux_from_json(doc.at("flux"), dim);
    SamplerOptions sopts;
    sopts.n_points = points;
    sopts.seed = seed;
    const auto rep = verify_hypotheses(flux, sopts);
    for (const auto& e : rep.entries)
      std::cout << e.name << ": " << (e.passed ? "pass" : "FAIL") << "  worst margin "
                << fmt(e.worst_margin) << "\n";
    std::cout << "fitted constants: c1=" << fmt(rep.c1) << " c2=" << fmt(rep.c2)
              << " c3=" << fmt(rep.c3) << " c4=" << fmt(rep.c4) << " c5=" << fmt(rep.c5) << "\n";
    std::cout << "theta = " << fmt(rep.theta) << "\n";
    if (strict && !rep.all_passed())
      throw StrictHypothesisFailure("hypothesis check failed in strict mode");
    return 0;
  }

  if (*cellcmd) {
    const auto doc = load_json_file(config_path);
    StudyConfig cfg;
    cfg.dim = doc.value("dim", 1);
    cfg.flux = flux_from_json(doc.at("flux"), cfg.dim);
    if (doc.contains("solver")) cfg.solver = solver_from_json(doc.at("solver"));
    const int n = n_override > 0 ? n_override : doc.value("cell_n", 256);
    const TensorGrid gz = make_grid(cfg.dim, n, Box::unit_cell(cfg.dim), BC::Periodic);
    const Vec xi = vec_from(xi_components, cfg.dim);

    CellSolution sol;
    if (level == "inner") {
      Vec y = Vec::zero(cfg.dim);
      if (!y_components.empty()) y = vec_from(y_components, cfg.dim);
      sol = solve_inner_cell(cfg.flux, y, r_frozen, xi, gz, cfg.solver);
    } else if (level == "outer") {
      const TensorGrid gy = make_grid(cfg.dim, n, Box::unit_cell(cfg.dim), BC::Periodic);
      sol = solve_outer_cell(cfg.flux, r_frozen, xi, gy, gz, cfg.solver);
    } else {
      throw std::invalid_argument("--level must be inner or outer");
    }
    std::cout << "averaged flux:";
    for (int c = 0; c < cfg.dim; ++c) std::cout << " " << fmt(sol.averaged_flux[c]);
    std::cout << "\nresidual " << fmt(sol.residual_norm) << ", " << sol.iterations
              << " iterations\n";
    save_field(sol.corrector, out_prefix + "_corrector.csv", out_prefix + "_corrector.json");
    return 0;
  }

  if (*tab) {
    const auto doc = load_json_file(config_path);
    StudyConfig cfg;
    cfg.dim = doc.value("dim", 1);
    cfg.flux = flux_from_json(doc.at("flux"), cfg.dim);
    cfg.cell_n = doc.value("cell_n", 256);
    if (doc.contains("solver")) cfg.solver = solver_from_json(doc.at("solver"));
    if (doc.contains("table")) cfg.table = table_from_json(doc.at("table"));
    const TensorGrid gy = make_grid(cfg.dim, cfg.cell_n, Box::unit_cell(cfg.dim), BC::Periodic);
    const TensorGrid gz = make_grid(cfg.dim, cfg.cell_n, Box::unit_cell(cfg.dim), BC::Periodic);
    const auto table = tabulate_q(cfg.flux, gy, gz, cfg.table, cfg.solver);
    save_table(table, out_prefix + ".csv", out_prefix + ".json");
    std::cout << "tabulated " << table.node_count() << " nodes -> " << out_prefix << ".csv\n";
    write_manifest(out_prefix + "_manifest.json",
                   {{"command", "tabulate"}, {"nodes", table.node_count()}}, cfg.solver,
                   wall_since(t0));
    return 0;
  }

  if (*macro) {
    StudyConfig cfg = study_from_json(load_json_file(config_path));
    const TensorGrid grid =
        make_grid(cfg.dim, cfg.macro_n, Box::unit_domain(cfg.dim), BC::DirichletZero);
    const ScalarField f = sample(grid, [&](const Vec& x) { return cfg.f(x); });
    const TensorGrid gy = make_grid(cfg.dim, cfg.cell_n, Box::unit_cell(cfg.dim), BC::Periodic);
    const TensorGrid gz = make_grid(cfg.dim, cfg.cell_n, Box::unit_cell(cfg.dim), BC::Periodic);

    FieldSolution sol;
    if (direct) {
      sol = solve_macro(direct_source(cfg.flux, gy, gz, cfg.solver), f, grid, cfg.solver);
    } else {
      EffectiveFluxTable table;
      if (!table_prefix.empty())
        table = load_table(table_prefix + ".csv", table_prefix + ".json");
      else
        table = tabulate_q(cfg.flux, gy, gz, cfg.table, cfg.solver);
      sol = solve_macro(table, f, grid, cfg.solver);
    }
    save_field(sol.u, out_prefix + "_u0.csv", out_prefix + "_u0.json");
    std::cout << "macro solve: residual " << fmt(sol.residual_norm) << ", " << sol.iterations
              << " iterations -> " << out_prefix << "_u0.csv\n";
    write_manifest(
        out_prefix + "_manifest.json",
        {{"command", "macro"}, {"residual", sol.residual_norm}, {"iterations", sol.iterations}},
        cfg.solver, wall_since(t0));
    return 0;
  }

  if (*fine) {
    StudyConfig cfg = study_from_json(load_json_file(config_path));
    const int n = n_override > 0 ? n_override : resolution_cells(eps);
    const TensorGrid grid = make_grid(cfg.dim, n, Box::unit_domain(cfg.dim), BC::DirichletZero);
    const ScalarField f = sample(grid, [&](const Vec& x) { return cfg.f(x); });
    const auto sol = solve_fine(cfg.flux, eps, f, grid, cfg.solver);
    save_field(sol.u, out_prefix + "_ueps.csv", out_prefix + "_ueps.json");
    const double energy = fine_flux_energy(cfg.flux, eps, sol.u);
    std::cout << "fine solve (eps=" << eps << ", n=" << n << "): residual "
              << fmt(sol.residual_norm) << ", " << sol.iterations << " iterations, energy "
              << fmt(energy) << " -> " << out_prefix << "_ueps.csv\n";
    write_manifest(out_prefix + "_manifest.json",
                   {{"command", "fine"},
                    {"eps", eps},
                    {"n", n},
                    {"residual", sol.residual_norm},
                    {"iterations", sol.iterations},
                    {"energy", energy}},
                   cfg.solver, wall_since(t0));
    return 0;
  }

  if (*study) {
    const StudyConfig cfg = study_from_json(load_json_file(config_path));
    const auto res = convergence_study(cfg);
    const std::string rows_path = out_prefix + "_rows." + format;
    export_rows(res.rows, format, rows_path);
    std::cout << "eps        err_l2        err_lux       energy\n";
    bool any_failed = false;
    for (const auto& row : res.rows) {
      if (row.failed) {
        std::cout << fmt(row.eps) << "  FAILED: " << row.failure << "\n";
        any_failed = true;
        continue;
      }
      std::cout << fmt(row.eps) << "  " << fmt(row.err_l2) << "  " << fmt(row.err_lux) << "  "
                << fmt(row.energy) << "\n";
    }
    nlohmann::json extra{{"command", "study"}, {"rows", rows_path}, {"l2_rates", res.l2_rates}};
    extra["failed_rows"] = any_failed;
    write_manifest(out_prefix + "_manifest.json", extra, cfg.solver, wall_since(t0));
    if (plot_data) {
      const auto dump_col = [&](const std::string& name, auto getter) {
        std::ofstream out(out_prefix + "_" + name + ".dat");
        for (const auto& row : res.rows)
          if (!row.failed) out << fmt(row.eps) << " " << fmt(getter(row)) << "\n";
      };
      dump_col("err_l2", [](const StudyRow& r) { return r.err_l2; });
      dump_col("err_lux", [](const StudyRow& r) { return r.err_lux; });
      dump_col("err_corrector", [](const StudyRow& r) { return r.err_corrector; });
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CliExit& e) {
    return e.code;
  } catch (const StrictHypothesisFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "range error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
