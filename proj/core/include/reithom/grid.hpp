#ifndef REITHOM_GRID_HPP
#define REITHOM_GRID_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reithom/common.hpp"
#include "reithom/nfunction.hpp"

namespace reithom {

enum class BC { Periodic, DirichletZero };

struct Box {
  Vec lo, hi;
  int dim() const { return lo.dim; }
  double extent(int axis) const { return hi[axis] - lo[axis]; }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= extent(a);
    return v;
  }
  static Box unit_cell(int d);    // (-1/2, 1/2)^d
  static Box unit_domain(int d);  // (0, 1)^d
};

/// Uniform tensor-product Q1 grid on an axis-aligned box, d in {1,2}, with
/// 2-point Gauss quadrature per axis per cell. Periodic grids identify
/// opposite faces (n nodes per axis); Dirichlet grids store all n+1 nodes per
/// axis but expose only the (n-1)^d interior ones as dofs.
class TensorGrid {
 public:
  TensorGrid() = default;
  TensorGrid(int dim, int n, Box box, BC bc);

  int dim() const { return dim_; }
  int n() const { return n_; }
  const Box& box() const { return box_; }
  BC bc() const { return bc_; }

  int nodes_per_axis() const { return bc_ == BC::Periodic ? n_ : n_ + 1; }
  long node_count() const;
  long dof_count() const;
  long cell_count() const;
  int quad_per_cell() const { return 1 << dim_; }
  long quad_count() const { return cell_count() * quad_per_cell(); }

  double h() const { return box_.extent(0) / n_; }
  double cell_volume() const;
  double quad_weight() const { return cell_volume() / quad_per_cell(); }

  Vec node_coord(long node) const;
  Vec quad_coord(long q) const;

  long node_to_dof(long node) const;  // -1 for Dirichlet boundary nodes
  long dof_to_node(long dof) const;
  bool boundary_node(long node) const;

  /// Corner node ids of a cell, lexicographic in the local bit pattern
  /// (bit a set = +1 step along axis a). Periodic wrap applied.
  void cell_nodes(long cell, long out[4]) const;

  /// Q1 shape function value of local node l at local quad point g.
  double shape_value(int g, int l) const;
  /// Physical-space shape gradient component (constant per axis spacing).
  double shape_grad(int g, int l, int axis) const;

 private:
  int dim_ = 0, n_ = 0;
  Box box_;
  BC bc_ = BC::Periodic;
  double qloc_[2] = {0.0, 0.0};  // reference Gauss offsets in [0,1]
};

TensorGrid make_grid(int dim, int n, const Box& box, BC bc);

/// Nodal scalar field. Dirichlet fields keep boundary storage; solver-made
/// fields vanish there by construction.
struct ScalarField {
  TensorGrid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const TensorGrid& g) : grid(g), values(static_cast<std::size_t>(g.node_count()), 0.0) {}
  double& at(long node) { return values[static_cast<std::size_t>(node)]; }
  double at(long node) const { return values[static_cast<std::size_t>(node)]; }
};

/// d-vector samples at the quadrature points, layout [q*dim + component].
struct VectorField {
  TensorGrid grid;
  std::vector<double> values;

  VectorField() = default;
  explicit VectorField(const TensorGrid& g)
      : grid(g), values(static_cast<std::size_t>(g.quad_count() * g.dim()), 0.0) {}
  Vec at(long q) const {
    Vec v = Vec::zero(grid.dim());
    for (int c = 0; c < grid.dim(); ++c) v[c] = values[static_cast<std::size_t>(q * grid.dim() + c)];
    return v;
  }
};

ScalarField sample(const TensorGrid& grid, const std::function<double(const Vec&)>& fn);

VectorField gradient(const ScalarField& u);

/// Q1 interpolation at an arbitrary point (periodic wrap / Dirichlet clamp).
double eval_at(const ScalarField& u, Vec p);
Vec gradient_at(const ScalarField& u, Vec p);

double integrate(const ScalarField& u);
double integrate(const TensorGrid& grid, const std::function<double(const Vec&)>& fn);

/// Subtract the box average; periodic grids only.
ScalarField zero_mean_project(const ScalarField& u);

/// Luxemburg norm inf{ k>0 : integral of Phi(|u|/k) <= 1 } by monotone
/// bisection on k. Zero field gives 0.
double luxemburg_norm(const ScalarField& u, const NFunction& nf);
/// Same on the pointwise Euclidean magnitude of a quad-point vector field.
double luxemburg_norm(const VectorField& v, const NFunction& nf);
/// Core routine over arbitrary quadrature samples with a uniform weight.
double luxemburg_norm(std::span<const double> qvals, double qweight, const NFunction& nf);

/// ||u||_Phi + sum_i ||d_i u||_Phi (component sum).
double orlicz_sobolev_norm(const ScalarField& u, const NFunction& nf);

void save_field(const ScalarField& u, const std::string& csv_path, const std::string& json_path);
ScalarField load_field(const std::string& csv_path, const std::string& json_path);

}  // namespace reithom

#endif
