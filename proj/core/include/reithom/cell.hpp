#ifndef REITHOM_CELL_HPP
#define REITHOM_CELL_HPP

#include <optional>
#include <string>
#include <vector>

#include "reithom/flux.hpp"
#include "reithom/grid.hpp"
#include "reithom/newton.hpp"

namespace reithom {

/// Corrector field on a periodic unit cell with its frozen parameters,
/// cell-averaged flux and solver diagnostics. The corrector has zero mean.
struct CellSolution {
  ScalarField corrector;
  std::optional<Vec> frozen_y;  // set for inner solutions
  double frozen_r = 0.0;
  Vec frozen_xi;
  Vec averaged_flux;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Inner cell problem: find the zero-mean periodic corrector pi2 with
///   integral over Z of a(y, z, r, xi + D pi2) . D theta dz = 0
/// for all discrete test functions; the averaged flux is h(y, r, xi).
CellSolution solve_inner_cell(const FluxCoefficient& a, const Vec& y, double r, const Vec& xi,
                              const TensorGrid& grid_Z, const SolveOptions& opts = {},
                              const std::vector<double>* warm_start = nullptr);

Vec eval_h(const FluxCoefficient& a, const Vec& y, double r, const Vec& xi,
           const TensorGrid& grid_Z, const SolveOptions& opts = {});

/// Outer cell problem: find the zero-mean periodic corrector pi1 with
///   integral over Y of h(y, r, xi + D pi1) . D theta dy = 0,
/// every h evaluation nesting a fresh warm-started inner solve at the
/// quadrature point; the averaged flux is q(r, xi).
CellSolution solve_outer_cell(const FluxCoefficient& a, double r, const Vec& xi,
                              const TensorGrid& grid_Y, const TensorGrid& grid_Z,
                              const SolveOptions& opts = {},
                              const std::vector<double>* warm_start = nullptr);

Vec eval_q(const FluxCoefficient& a, double r, const Vec& xi, const TensorGrid& grid_Y,
           const TensorGrid& grid_Z, const SolveOptions& opts = {});

struct TableOptions {
  double r_min = -2.0, r_max = 2.0;
  int r_n = 9;
  double xi_min = -2.0, xi_max = 2.0;
  int xi_n = 17;
  int workers = 0;  // 0 = HOMOG_THREADS / hardware
};

/// Effective flux q sampled on a tensor grid in (r, xi), multilinear
/// interpolation between nodes, no extrapolation.
struct EffectiveFluxTable {
  int dim = 1;
  std::vector<double> r_grid;
  std::vector<double> xi_grid;    // shared per xi axis
  std::vector<double> values;     // node-major, dim components per node
  std::vector<double> residuals;  // per node
  std::string provenance;         // solver options used, JSON

  long nodes_per_slice() const;
  long node_count() const;
  long flat_index(int ir, int i1, int i2 = 0) const;
  Vec value_at(long flat) const;
};

/// Solves q at every (r, xi) node. Nodes are distributed in contiguous chunks
/// over workers; each worker warm-starts from its previous node, so output is
/// schedule-independent for a fixed worker count. A node failure aborts with
/// the offending coordinates.
EffectiveFluxTable tabulate_q(const FluxCoefficient& a, const TensorGrid& grid_Y,
                              const TensorGrid& grid_Z, const TableOptions& topts = {},
                              const SolveOptions& opts = {});

/// Multilinear interpolation in (r, xi_1, ..., xi_d); node queries reproduce
/// node values exactly; out-of-hull queries throw TableHullError.
Vec interp_q(const EffectiveFluxTable& table, double r, const Vec& xi);
bool table_contains(const EffectiveFluxTable& table, double r, const Vec& xi);

void save_table(const EffectiveFluxTable& table, const std::string& csv_path,
                const std::string& json_path);
EffectiveFluxTable load_table(const std::string& csv_path, const std::string& json_path);

}  // namespace reithom

#endif
