#include "reithom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace reithom {

Box Box::unit_cell(int d) {
  Box b;
  b.lo = d == 1 ? Vec(-0.5) : Vec(-0.5, -0.5);
  b.hi = d == 1 ? Vec(0.5) : Vec(0.5, 0.5);
  return b;
}

Box Box::unit_domain(int d) {
  Box b;
  b.lo = d == 1 ? Vec(0.0) : Vec(0.0, 0.0);
  b.hi = d == 1 ? Vec(1.0) : Vec(1.0, 1.0);
  return b;
}

TensorGrid::TensorGrid(int dim, int n, Box box, BC bc) : dim_(dim), n_(n), box_(box), bc_(bc) {
  detail::require(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
  detail::require(n >= 2, "grid needs at least 2 cells per axis");
  detail::require(box.dim() == dim, "box dimension mismatch");
  for (int a = 0; a < dim; ++a)
    detail::require(box.extent(a) > 0.0, "box must have positive extent");
  // Uniform spacing is assumed across axes.
  if (dim == 2)
    detail::require(std::abs(box.extent(0) - box.extent(1)) < 1e-14, "box must be square");
  const double g = 0.5 / std::sqrt(3.0);
  qloc_[0] = 0.5 - g;
  qloc_[1] = 0.5 + g;
}

TensorGrid make_grid(int dim, int n, const Box& box, BC bc) { return {dim, n, box, bc}; }

long TensorGrid::node_count() const {
  long npa = nodes_per_axis();
  return dim_ == 1 ? npa : npa * npa;
}

long TensorGrid::dof_count() const {
  const long per = bc_ == BC::Periodic ? n_ : n_ - 1;
  return dim_ == 1 ? per : per * per;
}

long TensorGrid::cell_count() const { return dim_ == 1 ? n_ : static_cast<long>(n_) * n_; }

double TensorGrid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= box_.extent(a) / n_;
  return v;
}

Vec TensorGrid::node_coord(long node) const {
  const long npa = nodes_per_axis();
  Vec p = Vec::zero(dim_);
  p[0] = box_.lo[0] + h() * static_cast<double>(node % npa);
  if (dim_ == 2) p[1] = box_.lo[1] + h() * static_cast<double>(node / npa);
  return p;
}

Vec TensorGrid::quad_coord(long q) const {
  const int qpc = quad_per_cell();
  const long cell = q / qpc;
  const int g = static_cast<int>(q % qpc);
  Vec p = Vec::zero(dim_);
  const long ci = cell % n_;
  p[0] = box_.lo[0] + h() * (static_cast<double>(ci) + qloc_[g & 1]);
  if (dim_ == 2) {
    const long cj = cell / n_;
    p[1] = box_.lo[1] + h() * (static_cast<double>(cj) + qloc_[(g >> 1) & 1]);
  }
  return p;
}

bool TensorGrid::boundary_node(long node) const {
  if (bc_ == BC::Periodic) return false;
  const long npa = nodes_per_axis();
  const long i = node % npa, j = node / npa;
  if (i == 0 || i == npa - 1) return true;
  return dim_ == 2 && (j == 0 || j == npa - 1);
}

long TensorGrid::node_to_dof(long node) const {
  if (bc_ == BC::Periodic) return node;
  if (boundary_node(node)) return -1;
  const long npa = nodes_per_axis();
  const long i = node % npa, j = node / npa;
  return dim_ == 1 ? i - 1 : (i - 1) + (npa - 2) * (j - 1);
}

long TensorGrid::dof_to_node(long dof) const {
  if (bc_ == BC::Periodic) return dof;
  const long npa = nodes_per_axis();
  if (dim_ == 1) return dof + 1;
  const long per = npa - 2;
  return (dof % per + 1) + npa * (dof / per + 1);
}

void TensorGrid::cell_nodes(long cell, long out[4]) const {
  const long npa = nodes_per_axis();
  const long ci = cell % n_, cj = dim_ == 2 ? cell / n_ : 0;
  const auto idx = [&](long i, long j) {
    if (bc_ == BC::Periodic) {
      i %= n_;
      j %= n_;
    }
    return i + npa * j;
  };
  out[0] = idx(ci, cj);
  out[1] = idx(ci + 1, cj);
  // filled in 1D too; callers read 1 << dim entries
  out[2] = dim_ == 2 ? idx(ci, cj + 1) : out[0];
  out[3] = dim_ == 2 ? idx(ci + 1, cj + 1) : out[1];
}

double TensorGrid::shape_value(int g, int l) const {
  const double s0 = qloc_[g & 1];
  double v = (l & 1) ? s0 : 1.0 - s0;
  if (dim_ == 2) {
    const double s1 = qloc_[(g >> 1) & 1];
    v *= (l & 2) ? s1 : 1.0 - s1;
  }
  return v;
}

double TensorGrid::shape_grad(int g, int l, int axis) const {
  const double inv_h = 1.0 / h();
  if (dim_ == 1) return ((l & 1) ? 1.0 : -1.0) * inv_h;
  const double s0 = qloc_[g & 1];
  const double s1 = qloc_[(g >> 1) & 1];
  if (axis == 0) {
    const double d0 = (l & 1) ? 1.0 : -1.0;
    const double f1 = (l & 2) ? s1 : 1.0 - s1;
    return d0 * f1 * inv_h;
  }
  const double f0 = (l & 1) ? s0 : 1.0 - s0;
  const double d1 = (l & 2) ? 1.0 : -1.0;
  return f0 * d1 * inv_h;
}

ScalarField sample(const TensorGrid& grid, const std::function<double(const Vec&)>& fn) {
  ScalarField u(grid);
  for (long node = 0; node < grid.node_count(); ++node) u.at(node) = fn(grid.node_coord(node));
  return u;
}

VectorField gradient(const ScalarField& u) {
  const TensorGrid& g = u.grid;
  VectorField out(g);
  long nodes[4];
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << g.dim();
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      const long q = cell * qpc + gq;
      for (int a = 0; a < g.dim(); ++a) {
        double s = 0.0;
        for (int l = 0; l < nloc; ++l) s += u.at(nodes[l]) * g.shape_grad(gq, l, a);
        out.values[static_cast<std::size_t>(q * g.dim() + a)] = s;
      }
    }
  }
  return out;
}

namespace {

// Locate the cell containing p and the local coordinates within it.
void locate(const TensorGrid& g, Vec p, long& cell, double s[2]) {
  long ci[2] = {0, 0};
  for (int a = 0; a < g.dim(); ++a) {
    double t = (p[a] - g.box().lo[a]) / g.h();
    if (g.bc() == BC::Periodic) {
      t -= std::floor(t / g.n()) * g.n();
      if (t >= g.n()) t = 0.0;
    } else {
      t = std::clamp(t, 0.0, static_cast<double>(g.n()) - 1e-12);
    }
    double fl = std::floor(t);
    if (fl > g.n() - 1) fl = g.n() - 1;
    ci[a] = static_cast<long>(fl);
    s[a] = t - fl;
  }
  cell = ci[0] + (g.dim() == 2 ? g.n() * ci[1] : 0);
}

}  // namespace

double eval_at(const ScalarField& u, Vec p) {
  const TensorGrid& g = u.grid;
  long cell;
  double s[2];
  locate(g, p, cell, s);
  long nodes[4];
  g.cell_nodes(cell, nodes);
  if (g.dim() == 1) return u.at(nodes[0]) * (1.0 - s[0]) + u.at(nodes[1]) * s[0];
  return u.at(nodes[0]) * (1.0 - s[0]) * (1.0 - s[1]) + u.at(nodes[1]) * s[0] * (1.0 - s[1]) +
         u.at(nodes[2]) * (1.0 - s[0]) * s[1] + u.at(nodes[3]) * s[0] * s[1];
}

Vec gradient_at(const ScalarField& u, Vec p) {
  const TensorGrid& g = u.grid;
  long cell;
  double s[2];
  locate(g, p, cell, s);
  long nodes[4];
  g.cell_nodes(cell, nodes);
  const double inv_h = 1.0 / g.h();
  Vec out = Vec::zero(g.dim());
  if (g.dim() == 1) {
    out[0] = (u.at(nodes[1]) - u.at(nodes[0])) * inv_h;
    return out;
  }
  out[0] = ((u.at(nodes[1]) - u.at(nodes[0])) * (1.0 - s[1]) +
            (u.at(nodes[3]) - u.at(nodes[2])) * s[1]) * inv_h;
  out[1] = ((u.at(nodes[2]) - u.at(nodes[0])) * (1.0 - s[0]) +
            (u.at(nodes[3]) - u.at(nodes[1])) * s[0]) * inv_h;
  return out;
}

double integrate(const ScalarField& u) {
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
      sum += w * v;
    }
  }
  return sum;
}

double integrate(const TensorGrid& grid, const std::function<double(const Vec&)>& fn) {
  const double w = grid.quad_weight();
  double sum = 0.0;
  for (long q = 0; q < grid.quad_count(); ++q) sum += w * fn(grid.quad_coord(q));
  return sum;
}

ScalarField zero_mean_project(const ScalarField& u) {
  detail::require(u.grid.bc() == BC::Periodic, "zero_mean_project needs a periodic field");
  const double mean = integrate(u) / u.grid.box().volume();
  ScalarField out = u;
  for (double& v : out.values) v -= mean;
  return out;
}

double luxemburg_norm(std::span<const double> qvals, double qweight, const NFunction& nf) {
  double maxabs = 0.0;
  for (double v : qvals) {
    detail::require_domain(std::isfinite(v), "luxemburg_norm: non-finite sample");
    maxabs = std::max(maxabs, std::abs(v));
  }
  if (maxabs == 0.0) return 0.0;

  // The modular k -> integral of Phi(|u|/k) is nonincreasing; out-of-range
  // evaluations of tabulated families count as +infinity.
  const auto modular = [&](double k) {
    double s = 0.0;
    for (double v : qvals) {
      double ph;
      try {
        ph = nf.value(std::abs(v) / k);
      } catch (const std::out_of_range&) {
        return std::numeric_limits<double>::infinity();
      }
      s += qweight * ph;
      if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
    }
    return s;
  };

  const double m = std::max(1.0, maxabs);
  double lo = 1e-14 * m, hi = 10.0 * m;
  int guard = 0;
  while (modular(hi) > 1.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 400) throw std::runtime_error("luxemburg_norm: bracket expansion failed");
  }
  if (modular(lo) <= 1.0) {
    // Norm sits below the lower bracket; squeeze towards zero.
    while (lo > 1e-300 && modular(lo * 0.5) <= 1.0) lo *= 0.5;
    return lo;
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (modular(mid) <= 1.0 ? hi : lo) = mid;
  }
  return hi;
}

namespace {

std::vector<double> quad_values(const ScalarField& u) {
  const TensorGrid& g = u.grid;
  std::vector<double> vals(static_cast<std::size_t>(g.quad_count()));
  const int qpc = g.quad_per_cell();
  const int nloc = 1 << g.dim();
  long nodes[4];
  for (long cell = 0; cell < g.cell_count(); ++cell) {
    g.cell_nodes(cell, nodes);
    for (int gq = 0; gq < qpc; ++gq) {
      double v = 0.0;
      for (int l = 0; l < nloc; ++l) v += u.at(nodes[l]) * g.shape_value(gq, l);
      vals[static_cast<std::size_t>(cell * qpc + gq)] = v;
    }
  }
  return vals;
}

}  // namespace

double luxemburg_norm(const ScalarField& u, const NFunction& nf) {
  const auto vals = quad_values(u);
  return luxemburg_norm(vals, u.grid.quad_weight(), nf);
}

double luxemburg_norm(const VectorField& v, const NFunction& nf) {
  const TensorGrid& g = v.grid;
  std::vector<double> mags(static_cast<std::size_t>(g.quad_count()));
  for (long q = 0; q < g.quad_count(); ++q) mags[static_cast<std::size_t>(q)] = v.at(q).norm();
  return luxemburg_norm(mags, g.quad_weight(), nf);
}

double orlicz_sobolev_norm(const ScalarField& u, const NFunction& nf) {
  double total = luxemburg_norm(u, nf);
  const VectorField gr = gradient(u);
  const TensorGrid& g = u.grid;
  std::vector<double> comp(static_cast<std::size_t>(g.quad_count()));
  for (int a = 0; a < g.dim(); ++a) {
    for (long q = 0; q < g.quad_count(); ++q)
      comp[static_cast<std::size_t>(q)] = gr.values[static_cast<std::size_t>(q * g.dim() + a)];
    total += luxemburg_norm(comp, g.quad_weight(), nf);
  }
  return total;
}

void save_field(const ScalarField& u, const std::string& csv_path, const std::string& json_path) {
  const TensorGrid& g = u.grid;
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open for writing: " + csv_path);
  const long npa = g.nodes_per_axis();
  char buf[64];
  if (g.dim() == 1)
    csv << "i,value\n";
  else
    csv << "i,j,value\n";
  for (long node = 0; node < g.node_count(); ++node) {
    std::snprintf(buf, sizeof buf, "%.17g", u.at(node));
    if (g.dim() == 1)
      csv << node << "," << buf << "\n";
    else
      csv << node % npa << "," << node / npa << "," << buf << "\n";
  }
  nlohmann::json meta;
  meta["dim"] = g.dim();
  meta["n"] = g.n();
  meta["bc"] = g.bc() == BC::Periodic ? "periodic" : "dirichlet0";
  meta["box"] = {{"lo", std::vector<double>(g.box().lo.v.begin(), g.box().lo.v.begin() + g.dim())},
                 {"hi", std::vector<double>(g.box().hi.v.begin(), g.box().hi.v.begin() + g.dim())}};
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot open for writing: " + json_path);
  js << meta.dump(2) << "\n";
}

ScalarField load_field(const std::string& csv_path, const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot open: " + json_path);
  nlohmann::json meta = nlohmann::json::parse(js);
  const int dim = meta.at("dim").get<int>();
  const int n = meta.at("n").get<int>();
  const BC bc = meta.at("bc").get<std::string>() == "periodic" ? BC::Periodic : BC::DirichletZero;
  Box box;
  const auto lo = meta.at("box").at("lo").get<std::vector<double>>();
  const auto hi = meta.at("box").at("hi").get<std::vector<double>>();
  box.lo = dim == 1 ? Vec(lo[0]) : Vec(lo[0], lo[1]);
  box.hi = dim == 1 ? Vec(hi[0]) : Vec(hi[0], hi[1]);
  ScalarField u(make_grid(dim, n, box, bc));

  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open: " + csv_path);
  std::string line;
  std::getline(csv, line);  // header
  const long npa = u.grid.nodes_per_axis();
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    long i = 0, j = 0;
    std::getline(ls, tok, ',');
    i = std::stol(tok);
    if (dim == 2) {
      std::getline(ls, tok, ',');
      j = std::stol(tok);
    }
    std::getline(ls, tok, ',');
    u.at(i + npa * j) = std::stod(tok);
  }
  return u;
}

}  // namespace reithom
