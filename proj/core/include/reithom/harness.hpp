#ifndef REITHOM_HARNESS_HPP
#define REITHOM_HARNESS_HPP

#include <functional>
#include <string>
#include <vector>

#include "reithom/cell.hpp"
#include "reithom/expression.hpp"
#include "reithom/flux.hpp"
#include "reithom/grid.hpp"
#include "reithom/solver.hpp"

namespace reithom {

/// Separable test function f(x) g(y) w(z), periodic in (y, z).
struct SeparableTest {
  Expression fx = Expression::constant(1.0);
  Expression gy = Expression::constant(1.0);
  Expression wz = Expression::constant(1.0);
  std::string label;

  double operator()(const Vec& x, const Vec& y, const Vec& z) const {
    return fx(x) * gy(y) * wz(z);
  }
};

/// Pairing integral of u against the composed test function:
///   integral over Omega of u(x) f(x, x/eps, x/eps^2) dx,
/// quadrature refined to at least 8 cells per eps^2 period regardless of the
/// field's own grid.
double twoscale_pairing(const ScalarField& u, const SeparableTest& test, double eps);
double twoscale_pairing(const std::function<double(const Vec&)>& u, const Box& domain,
                        const SeparableTest& test, double eps);

/// Tensor-product Gauss quadrature over Omega x Y x Z.
double triple_integral(const std::function<double(const Vec& x, const Vec& y, const Vec& z)>& g,
                       const TensorGrid& grid_X, const TensorGrid& grid_Y,
                       const TensorGrid& grid_Z);
/// Default grids: Omega = (0,1)^d, unit cells, 32 cells per axis in 1D, 8 in 2D.
double triple_integral(const std::function<double(const Vec&, const Vec&, const Vec&)>& g,
                       int dim = 1);

/// Discrete L2 norm of a field (quadrature of the Q1 interpolant squared).
double l2_norm(const ScalarField& u);
/// L2 norm of the pointwise gradient magnitude.
double l2_gradient_norm(const ScalarField& u);

struct StudyConfig {
  int dim = 1;
  FluxCoefficient flux = make_linear_separable(1, Expression::constant(1.0),
                                               Expression::constant(1.0));
  NFunction nf = NFunction::scaled_power(2.0);  // norm family for err_lux
  Expression f = Expression::constant(1.0);
  std::vector<double> eps_list;  // strictly decreasing
  std::vector<int> fine_n;       // per eps; empty = resolution rule
  int macro_n = 128;
  int cell_n = 256;
  int recon_cell_n = 64;
  bool with_corrector = true;
  std::vector<SeparableTest> pairing_tests;
  TableOptions table;
  SolveOptions solver;
  int workers = 0;
};

struct StudyRow {
  double eps = 0.0;
  double err_lux = 0.0;
  double err_l2 = 0.0;
  double err_corrector = 0.0;
  std::vector<double> pairing_gap;
  double energy = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  bool failed = false;
  std::string failure;
};

struct StudyResult {
  std::vector<StudyRow> rows;    // descending eps
  std::vector<double> l2_rates;  // log2(err(eps)/err(eps/2)) between rows
  ScalarField u0;
  EffectiveFluxTable table;
};

/// Smallest power-of-two cell count satisfying h <= eps^2/8 on a unit extent.
int resolution_cells(double eps, double extent = 1.0);

/// Fine solves per eps against the homogenized solution: tabulates q once,
/// solves the macroscopic problem once, then fills one row per eps with error
/// norms, pairing gaps and the energy. Rows run concurrently; failures mark
/// the row and the sweep continues.
StudyResult convergence_study(const StudyConfig& cfg);

/// CSV columns: eps, err_lux, err_l2, err_corrector, pairing_gap_1..k,
/// energy, iterations, wall_ms; 17 significant digits, deterministic bytes.
void export_rows(const std::vector<StudyRow>& rows, const std::string& format,
                 const std::string& path);
std::vector<StudyRow> load_rows_json(const std::string& path);

}  // namespace reithom

#endif
