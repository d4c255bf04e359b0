#ifndef REITHOM_COMMON_HPP
#define REITHOM_COMMON_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace reithom {

// Spatial dimension is 1 or 2 throughout the toolkit.
inline constexpr int kMaxDim = 2;

/// Small fixed-capacity vector for points, gradients and fluxes in R^d, d <= 2.
struct Vec {
  std::array<double, kMaxDim> v{0.0, 0.0};
  int dim = 1;

  Vec() = default;
  explicit Vec(double x) : v{x, 0.0}, dim(1) {}
  Vec(double x, double y) : v{x, y}, dim(2) {}
  static Vec zero(int d) {
    Vec r;
    r.dim = d;
    return r;
  }

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < dim; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < dim; ++i) v[i] -= o.v[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < dim; ++i) v[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }

  double dot(const Vec& o) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += v[i] * o.v[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }
};

/// Small d x d matrix (row major), d <= 2. Used for flux Jacobians d a / d lambda.
struct Mat {
  std::array<double, kMaxDim * kMaxDim> m{0.0, 0.0, 0.0, 0.0};
  int dim = 1;

  Mat() = default;
  static Mat identity(int d, double s = 1.0) {
    Mat r;
    r.dim = d;
    for (int i = 0; i < d; ++i) r(i, i) = s;
    return r;
  }
  double& operator()(int i, int j) { return m[static_cast<std::size_t>(i * dim + j)]; }
  double operator()(int i, int j) const { return m[static_cast<std::size_t>(i * dim + j)]; }

  Vec apply(const Vec& x) const {
    Vec r = Vec::zero(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) r[i] += (*this)(i, j) * x[j];
    return r;
  }
};

/// Thrown when an iterative solve fails to reach its residual tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

/// Thrown by table interpolation when a query leaves the tabulated hull.
class TableHullError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_domain(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

/// Wrap a coordinate into the centered unit cell [-1/2, 1/2).
inline double wrap_cell(double t) {
  double u = t + 0.5;
  u -= std::floor(u);
  return u - 0.5;
}

}  // namespace detail

}  // namespace reithom

#endif
