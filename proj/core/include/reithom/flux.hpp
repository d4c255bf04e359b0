#ifndef REITHOM_FLUX_HPP
#define REITHOM_FLUX_HPP

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reithom/common.hpp"
#include "reithom/expression.hpp"
#include "reithom/nfunction.hpp"

namespace reithom {

/// Solution-dependent damping of the coercivity bound: h continuous,
/// nonincreasing, mapping [0,inf) into (0,1) with a positive lower bound.
struct DegenerateWeight {
  std::function<double(double)> h;
  double h_min = 0.0;

  static DegenerateWeight constant(double h0);
  static DegenerateWeight from_expression(const Expression& e, double h_min);
  /// Sampled sanity check of the declared properties; throws on violation.
  void validate() const;
};

/// The coefficient a(y, z, zeta, lambda) in R^d together with its growth pair
/// (Phi, Psi), periodicity metadata and coercivity weight. Evaluation is pure
/// and reentrant.
class FluxCoefficient {
 public:
  using EvalFn = std::function<Vec(const Vec& y, const Vec& z, double zeta, const Vec& lambda)>;
  using JacFn = std::function<Mat(const Vec& y, const Vec& z, double zeta, const Vec& lambda)>;

  struct Setup {
    int dim = 1;
    EvalFn eval;
    JacFn d_lambda;  // optional analytic Jacobian
    bool periodic = true;
    bool zeta_dependent = false;
    NFunction phi = NFunction::scaled_power(2.0);
    NFunction psi = NFunction::scaled_power(2.0);
    DegenerateWeight weight = DegenerateWeight::constant(0.5);
    std::vector<double> y_interfaces[kMaxDim];  // declared discontinuities, cell coords
    std::vector<double> z_interfaces[kMaxDim];
    std::string family = "custom";
  };

  explicit FluxCoefficient(Setup s);

  Vec operator()(const Vec& y, const Vec& z, double zeta, const Vec& lambda) const;
  /// Analytic Jacobian when declared, central finite differences otherwise.
  Mat d_lambda(const Vec& y, const Vec& z, double zeta, const Vec& lambda) const;
  bool has_analytic_d_lambda() const;
  /// d a / d zeta, finite differences; zero for zeta-independent families.
  Vec d_zeta(const Vec& y, const Vec& z, double zeta, const Vec& lambda) const;

  int dim() const;
  bool periodic() const;
  bool zeta_dependent() const;
  const NFunction& phi() const;
  const NFunction& psi() const;
  const DegenerateWeight& weight() const;
  const std::vector<double>& y_interfaces(int axis) const;
  const std::vector<double>& z_interfaces(int axis) const;
  const std::string& family() const;

  /// theta = conj(Phi)^{-1}(Phi(h_min)) > 0, the coercivity constant.
  double theta() const;

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

/// a(y,z,zeta,lambda) = c_y(y) c_z(z) lambda with analytic Jacobian.
/// Both coefficients must be positive and bounded on the unit cell.
FluxCoefficient make_linear_separable(int dim, const Expression& c_y, const Expression& c_z);

/// a = c_y c_z phi(|lambda|) lambda/|lambda| for the density phi of nf.
FluxCoefficient make_phi_laplacian(int dim, const NFunction& nf, const Expression& c_y,
                                   const Expression& c_z);

/// Degenerate family a = c_y c_z g(h(|zeta|)) phi(|lambda|) lambda/|lambda|
/// with g(s) = conj(Phi)^{-1}(Phi(s)), so the declared weight makes the
/// coercivity margin checkable.
FluxCoefficient make_degenerate(int dim, const NFunction& nf, const Expression& c_y,
                                const Expression& c_z, DegenerateWeight w);

struct SamplerOptions {
  int n_points = 200;
  std::uint64_t seed = 1234;
  double zeta_range = 2.0;    // zeta in [-range, range]
  double lambda_range = 2.0;  // lambda components likewise
  double tol = 1e-9;
  int workers = 0;  // 0 = respect HOMOG_THREADS / hardware
};

struct HypothesisEntry {
  std::string name;
  bool passed = false;
  double worst_margin = 0.0;
  std::array<double, 10> witness{};  // y(2), z(2), zeta, zeta', lambda(2), lambda'(2)
};

struct HypothesisReport {
  std::vector<HypothesisEntry> entries;
  double theta = 0.0;
  double c1 = 0.0, c2 = 1.0, c3 = 0.0, c4 = 1.0, c5 = 0.0;  // fitted constants
  bool all_passed() const;
  const HypothesisEntry& entry(const std::string& name) const;
};

/// Samples the structural hypotheses on pseudo-random tuples: continuity in z
/// (H1) and in y (H5ii) by halving-step ratio tests that avoid declared
/// interfaces, growth constants fitted from samples (H2), coercivity against
/// the declared weight (H3), monotonicity (H4), exact integer-shift
/// periodicity (H5i) and the fitted strong-monotonicity constant c5 (H6).
HypothesisReport verify_hypotheses(const FluxCoefficient& a, const SamplerOptions& opts = {});

}  // namespace reithom

#endif
