#ifndef REITHOM_SOLVER_HPP
#define REITHOM_SOLVER_HPP

#include <functional>

#include "reithom/cell.hpp"
#include "reithom/flux.hpp"
#include "reithom/grid.hpp"
#include "reithom/newton.hpp"

namespace reithom {

struct FieldSolution {
  ScalarField u;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Effective flux source for the macroscopic problem: the map q(r, xi) with
/// optional derivatives; missing derivatives fall back to finite differences.
struct MacroFluxSource {
  std::function<Vec(double r, const Vec& xi)> q;
  std::function<Mat(double r, const Vec& xi)> dq_dxi;
  std::function<Vec(double r, const Vec& xi)> dq_dr;
};

MacroFluxSource table_source(const EffectiveFluxTable& table);
MacroFluxSource direct_source(const FluxCoefficient& a, const TensorGrid& grid_Y,
                              const TensorGrid& grid_Z, const SolveOptions& cell_opts = {});

/// Homogenized Dirichlet problem: find u0 with
///   integral q(u0, D u0) . D v = integral f v  for all discrete v.
/// Table sources hull-check every evaluation and throw TableHullError with a
/// re-tabulation hint when the iterates leave the tabulated box.
FieldSolution solve_macro(const MacroFluxSource& src, const ScalarField& f,
                          const TensorGrid& grid, const SolveOptions& opts = {},
                          const ScalarField* init = nullptr);
FieldSolution solve_macro(const EffectiveFluxTable& table, const ScalarField& f,
                          const TensorGrid& grid, const SolveOptions& opts = {},
                          const ScalarField* init = nullptr);

/// Fine-scale problem with oscillating coefficient a(x/eps, x/eps^2, u, Du).
/// The grid must resolve the finest scale: h <= eps^2 / 8.
FieldSolution solve_fine(const FluxCoefficient& a, double eps, const ScalarField& f,
                         const TensorGrid& grid, const SolveOptions& opts = {},
                         const ScalarField* init = nullptr);

/// First-order two-scale reconstruction on grid_out:
///   u0(x) + eps pi1(u0, Du0)(x/eps) + eps^2 pi2(x/eps, u0, Du0 + Dy pi1)(x/eps^2)
/// with nodal interpolation of the corrector parameters and warm-started
/// per-node cell solves.
ScalarField reconstruct(const ScalarField& u0, const FluxCoefficient& a, double eps,
                        const TensorGrid& grid_out, const TensorGrid& grid_Y,
                        const TensorGrid& grid_Z, const SolveOptions& opts = {});

/// Limit triple (u0, u1, u2); the correctors are realized lazily through cell
/// solves at the frozen macroscopic state.
class HomogTriple {
 public:
  HomogTriple(ScalarField u0, FluxCoefficient a, TensorGrid grid_Y, TensorGrid grid_Z,
              SolveOptions opts = {});
  const ScalarField& u0() const { return u0_; }
  double u1_at(const Vec& x, const Vec& y) const;
  double u2_at(const Vec& x, const Vec& y, const Vec& z) const;
  ScalarField reconstruction(double eps, const TensorGrid& grid_out) const;

 private:
  ScalarField u0_;
  FluxCoefficient a_;
  TensorGrid grid_Y_, grid_Z_;
  SolveOptions opts_;
};

/// Quadrature of a(x/eps, x/eps^2, u, Du) . Du over the domain.
double fine_flux_energy(const FluxCoefficient& a, double eps, const ScalarField& u);
/// Quadrature of q(u, Du) . Du.
double macro_flux_energy(const MacroFluxSource& src, const ScalarField& u);
/// Quadrature of f u (fields on the same grid).
double load_energy(const ScalarField& f, const ScalarField& u);

}  // namespace reithom

#endif
