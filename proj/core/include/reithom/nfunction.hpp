#ifndef REITHOM_NFUNCTION_HPP
#define REITHOM_NFUNCTION_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reithom {

// Family tag of an N-function. Power{p} is t^p, ScaledPower{p} is t^p/p,
// PowerLog{p} is t^p*log(1+t). Tabulated wraps density samples with monotone
// cubic interpolation. CoeffPower (c*t^p) and Legendre only arise as duals.
enum class NFKind { Power, ScaledPower, PowerLog, Tabulated, CoeffPower, Legendre };

struct ConjugatePair;

/// An N-function Phi with density phi: Phi(t) = integral of phi over [0,t].
/// Values are immutable after construction; all member calls are pure.
class NFunction {
 public:
  static NFunction power(double p);
  static NFunction scaled_power(double p);
  static NFunction power_log(double p);
  /// Density samples (t_i, phi_i), t strictly increasing, phi nondecreasing.
  /// A leading (0,0) node is implied when t[0] > 0.
  static NFunction tabulated(std::vector<double> t, std::vector<double> phi);

  double value(double t) const;    // Phi(t); domain error for t < 0 or non-finite
  double density(double t) const;  // phi(t)
  bool has_second_derivative() const;
  double second_derivative(double t) const;  // phi'(t)

  /// Phi^{-1}(v) by monotone bisection with geometric bracket expansion.
  double inverse(double v) const;
  /// phi^{-1}(s); range error when s exceeds the reachable density range.
  double density_inverse(double s) const;

  NFKind kind() const;
  double exponent() const;  // p for the power-type families, 0 otherwise
  std::string describe() const;

  struct Impl;

 private:
  explicit NFunction(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
  friend struct ConjugatePair;
  friend ConjugatePair conjugate(const NFunction&, bool);
};

/// Primal/dual pair under the Legendre transform Phi~(s) = sup_t (st - Phi(t)).
struct ConjugatePair {
  enum class Construction { ClosedForm, NumericalLegendre };
  NFunction primal;
  NFunction dual;
  Construction construction;
};

/// Conjugate N-function. Closed forms for the pure power families unless
/// force_numerical is set; otherwise the pointwise Legendre transform computed
/// by solving phi(t*) = s with monotone bisection.
ConjugatePair conjugate(const NFunction& nf, bool force_numerical = false);

struct GrowthIndices {
  double lower;  // inf over the grid of t*phi(t)/Phi(t)
  double upper;  // sup over the grid
  std::vector<double> grid;
};

/// Simonenko-type index bounds sampled on t_grid (all entries > 0).
GrowthIndices simonenko_indices(const NFunction& nf, std::span<const double> t_grid);

struct Delta2Report {
  bool passes;
  double alpha;  // sup over the grid of Phi(2t)/Phi(t)
  double t0;
};

/// Doubling check. Not-Delta2 is declared when the running sup of
/// Phi(2t)/Phi(t) grows by more than 10% between the last two decades of the
/// grid, which separates polynomial from exponential growth on finite grids.
Delta2Report check_delta2(const NFunction& nf, double t0, std::span<const double> t_grid);
Delta2Report check_delta2(const NFunction& nf);  // t0 = 1, log grid [1, 1e6], 4096 points

struct DeltaPrimeReport {
  bool passes;
  double c;  // sup over grid pairs of Phi(st)/(Phi(s)*Phi(t))
};

/// Submultiplicativity check Phi(st) <= C Phi(s)Phi(t), same decade rule.
DeltaPrimeReport check_delta_prime(const NFunction& nf, std::span<const double> t_grid);

struct DominationReport {
  bool dominates;
  double k;  // smallest admissible k, NaN when not dominated
};

/// Does b dominate c, i.e. C(t) <= B(kt) for some k in k_grid and all t in t_grid?
DominationReport check_domination(const NFunction& c, const NFunction& b,
                                  std::span<const double> k_grid,
                                  std::span<const double> t_grid);

/// Log-spaced abscissa, inclusive endpoints.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace reithom

#endif
