#include "reithom/nfunction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "reithom/common.hpp"

namespace reithom {

namespace {

constexpr double kBisectTol = 1e-12;
constexpr int kBisectMaxIter = 200;

void check_arg(double t) {
  detail::require_domain(std::isfinite(t) && t >= 0.0, "N-function argument must be finite and nonnegative");
}

}  // namespace

struct NFunction::Impl {
  virtual ~Impl() = default;
  virtual double value(double t) const = 0;
  virtual double density(double t) const = 0;
  virtual bool has_d2() const { return false; }
  virtual double d2(double) const { throw std::logic_error("second derivative unavailable"); }
  virtual NFKind kind() const = 0;
  virtual double exponent() const { return 0.0; }
  virtual std::string describe() const = 0;
  /// Largest density value the family can report; infinity when unbounded.
  virtual double density_sup() const { return std::numeric_limits<double>::infinity(); }
  virtual double domain_sup() const { return std::numeric_limits<double>::infinity(); }
};

namespace {

struct PowerImpl final : NFunction::Impl {
  double p;
  explicit PowerImpl(double p) : p(p) {}
  double value(double t) const override { return std::pow(t, p); }
  double density(double t) const override { return p * std::pow(t, p - 1.0); }
  bool has_d2() const override { return true; }
  double d2(double t) const override { return p * (p - 1.0) * std::pow(t, p - 2.0); }
  NFKind kind() const override { return NFKind::Power; }
  double exponent() const override { return p; }
  std::string describe() const override {
    std::ostringstream os;
    os << "t^" << p;
    return os.str();
  }
};

struct ScaledPowerImpl final : NFunction::Impl {
  double p;
  explicit ScaledPowerImpl(double p) : p(p) {}
  double value(double t) const override { return std::pow(t, p) / p; }
  double density(double t) const override { return std::pow(t, p - 1.0); }
  bool has_d2() const override { return true; }
  double d2(double t) const override { return (p - 1.0) * std::pow(t, p - 2.0); }
  NFKind kind() const override { return NFKind::ScaledPower; }
  double exponent() const override { return p; }
  std::string describe() const override {
    std::ostringstream os;
    os << "t^" << p << "/" << p;
    return os.str();
  }
};

struct PowerLogImpl final : NFunction::Impl {
  double p;
  explicit PowerLogImpl(double p) : p(p) {}
  double value(double t) const override { return std::pow(t, p) * std::log1p(t); }
  double density(double t) const override {
    return p * std::pow(t, p - 1.0) * std::log1p(t) + std::pow(t, p) / (1.0 + t);
  }
  bool has_d2() const override { return true; }
  double d2(double t) const override {
    const double tp = std::pow(t, p);
    return p * (p - 1.0) * std::pow(t, p - 2.0) * std::log1p(t) +
           2.0 * p * std::pow(t, p - 1.0) / (1.0 + t) - tp / ((1.0 + t) * (1.0 + t));
  }
  NFKind kind() const override { return NFKind::PowerLog; }
  double exponent() const override { return p; }
  std::string describe() const override {
    std::ostringstream os;
    os << "t^" << p << "*log(1+t)";
    return os.str();
  }
};

struct CoeffPowerImpl final : NFunction::Impl {
  double c, p;
  CoeffPowerImpl(double c, double p) : c(c), p(p) {}
  double value(double t) const override { return c * std::pow(t, p); }
  double density(double t) const override { return c * p * std::pow(t, p - 1.0); }
  bool has_d2() const override { return true; }
  double d2(double t) const override { return c * p * (p - 1.0) * std::pow(t, p - 2.0); }
  NFKind kind() const override { return NFKind::CoeffPower; }
  double exponent() const override { return p; }
  std::string describe() const override {
    std::ostringstream os;
    os << c << "*t^" << p;
    return os.str();
  }
};

// Monotone piecewise-cubic (Fritsch-Carlson) interpolation of the density,
// integrated segment-exactly for the value.
struct TabulatedImpl final : NFunction::Impl {
  std::vector<double> t, f, d, cum;

  TabulatedImpl(std::vector<double> ts, std::vector<double> fs) {
    detail::require(ts.size() == fs.size() && ts.size() >= 2, "tabulated density needs >= 2 samples");
    if (ts.front() > 0.0) {
      ts.insert(ts.begin(), 0.0);
      fs.insert(fs.begin(), 0.0);
    }
    detail::require(ts.front() == 0.0 && fs.front() == 0.0, "tabulated density must start at (0,0)");
    for (std::size_t i = 1; i < ts.size(); ++i) {
      detail::require(ts[i] > ts[i - 1], "tabulated abscissa must be strictly increasing");
      detail::require(fs[i] >= fs[i - 1], "tabulated density must be nondecreasing");
    }
    t = std::move(ts);
    f = std::move(fs);
    const std::size_t n = t.size();
    // Fritsch-Carlson slopes keep the interpolant monotone.
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = t[k + 1] - t[k];
      delta[k] = (f[k + 1] - f[k]) / h[k];
    }
    d.assign(n, 0.0);
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) {
        d[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (delta[k] == 0.0) {
        d[k] = d[k + 1] = 0.0;
        continue;
      }
      const double a = d[k] / delta[k], b = d[k + 1] / delta[k];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        d[k] = tau * a * delta[k];
        d[k + 1] = tau * b * delta[k];
      }
    }
    cum.assign(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k)
      cum[k + 1] = cum[k] + h[k] * (0.5 * (f[k] + f[k + 1]) + h[k] * (d[k] - d[k + 1]) / 12.0);
  }

  std::size_t segment(double x) const {
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t k = static_cast<std::size_t>(it - t.begin());
    if (k == 0) return 0;
    return std::min(k - 1, t.size() - 2);
  }

  double density(double x) const override {
    if (x > t.back())
      throw std::out_of_range("tabulated N-function queried beyond its abscissa range");
    const std::size_t k = segment(x);
    const double h = t[k + 1] - t[k];
    const double s = (x - t[k]) / h;
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    return f[k] * h00 + h * d[k] * h10 + f[k + 1] * h01 + h * d[k + 1] * h11;
  }

  double value(double x) const override {
    if (x > t.back())
      throw std::out_of_range("tabulated N-function queried beyond its abscissa range");
    const std::size_t k = segment(x);
    const double h = t[k + 1] - t[k];
    const double s = (x - t[k]) / h;
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
    const double i00 = 0.5 * s4 - s3 + s;
    const double i10 = 0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2;
    const double i01 = -0.5 * s4 + s3;
    const double i11 = 0.25 * s4 - s3 / 3.0;
    return cum[k] + h * (f[k] * i00 + h * d[k] * i10 + f[k + 1] * i01 + h * d[k + 1] * i11);
  }

  NFKind kind() const override { return NFKind::Tabulated; }
  std::string describe() const override { return "tabulated density"; }
  double density_sup() const override { return f.back(); }
  double domain_sup() const override { return t.back(); }
};

// Pointwise Legendre transform of a primal N-function:
//   dual(s) = s*t* - Phi(t*) with phi(t*) = s,  dual density = phi^{-1}.
struct LegendreImpl final : NFunction::Impl {
  NFunction primal;
  explicit LegendreImpl(NFunction primal) : primal(std::move(primal)) {}
  double value(double s) const override {
    if (s == 0.0) return 0.0;
    const double tstar = primal.density_inverse(s);
    return s * tstar - primal.value(tstar);
  }
  double density(double s) const override {
    if (s == 0.0) return 0.0;
    return primal.density_inverse(s);
  }
  NFKind kind() const override { return NFKind::Legendre; }
  std::string describe() const override { return "legendre(" + primal.describe() + ")"; }
};

std::shared_ptr<const NFunction::Impl> make_impl(NFKind kind, double p) {
  switch (kind) {
    case NFKind::Power:
      return std::make_shared<PowerImpl>(p);
    case NFKind::ScaledPower:
      return std::make_shared<ScaledPowerImpl>(p);
    case NFKind::PowerLog:
      return std::make_shared<PowerLogImpl>(p);
    default:
      throw std::logic_error("not a closed-form family");
  }
}

// N-function admissibility, sampled: convexity of Phi, phi nondecreasing,
// Phi(t)/t -> 0 and -> infinity toward the grid endpoints.
void validate(const NFunction& nf, double hi) {
  const auto grid = log_grid(1e-8, hi, 64);
  double prev_phi = -1.0;
  for (double t : grid) {
    const double ph = nf.density(t);
    detail::require(ph >= prev_phi * (1.0 - 1e-12), "density must be nondecreasing");
    prev_phi = ph;
    const double mid = nf.value(0.5 * (t + grid.front()));
    const double avg = 0.5 * (nf.value(t) + nf.value(grid.front()));
    detail::require(mid <= avg * (1.0 + 1e-10) + 1e-300, "value must be convex");
  }
  detail::require(nf.value(0.0) == 0.0, "Phi(0) must be 0");
  const double slope_lo = nf.value(grid.front()) / grid.front();
  const double slope_hi = nf.value(hi) / hi;
  detail::require(slope_hi > 10.0 * slope_lo, "Phi(t)/t must grow across the test grid");
}

}  // namespace

NFunction::NFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

NFunction NFunction::power(double p) {
  detail::require(p > 1.0, "power family requires p > 1");
  NFunction nf(make_impl(NFKind::Power, p));
  validate(nf, 1e6);
  return nf;
}

NFunction NFunction::scaled_power(double p) {
  detail::require(p > 1.0, "scaled power family requires p > 1");
  NFunction nf(make_impl(NFKind::ScaledPower, p));
  validate(nf, 1e6);
  return nf;
}

NFunction NFunction::power_log(double p) {
  detail::require(p >= 1.0, "power-log family requires p >= 1");
  NFunction nf(make_impl(NFKind::PowerLog, p));
  validate(nf, 1e6);
  return nf;
}

NFunction NFunction::tabulated(std::vector<double> t, std::vector<double> phi) {
  NFunction nf(std::make_shared<TabulatedImpl>(std::move(t), std::move(phi)));
  validate(nf, nf.impl_->domain_sup());
  return nf;
}

double NFunction::value(double t) const {
  check_arg(t);
  return impl_->value(t);
}

double NFunction::density(double t) const {
  check_arg(t);
  return impl_->density(t);
}

bool NFunction::has_second_derivative() const { return impl_->has_d2(); }

double NFunction::second_derivative(double t) const {
  check_arg(t);
  return impl_->d2(t);
}

double NFunction::inverse(double v) const {
  detail::require_domain(std::isfinite(v) && v >= 0.0, "inverse argument must be finite and nonnegative");
  if (v == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (impl_->value(hi) < v) {
    lo = hi;
    hi *= 2.0;
    if (hi > impl_->domain_sup() || ++guard > 1200)
      throw std::out_of_range("inverse target beyond representable range");
  }
  for (int i = 0; i < kBisectMaxIter && (hi - lo) > kBisectTol; ++i) {
    const double mid = 0.5 * (lo + hi);
    (impl_->value(mid) < v ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double NFunction::density_inverse(double s) const {
  detail::require_domain(std::isfinite(s) && s >= 0.0, "density_inverse argument must be nonnegative");
  if (s == 0.0) return 0.0;
  if (s > impl_->density_sup())
    throw std::out_of_range("density value beyond tabulated range, cannot bracket");
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (impl_->density(hi) < s) {
    lo = hi;
    hi *= 2.0;
    if (hi > impl_->domain_sup() || ++guard > 1200)
      throw std::out_of_range("density value beyond representable range");
  }
  for (int i = 0; i < kBisectMaxIter && (hi - lo) > kBisectTol; ++i) {
    const double mid = 0.5 * (lo + hi);
    (impl_->density(mid) < s ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

NFKind NFunction::kind() const { return impl_->kind(); }
double NFunction::exponent() const { return impl_->exponent(); }
std::string NFunction::describe() const { return impl_->describe(); }

ConjugatePair conjugate(const NFunction& nf, bool force_numerical) {
  if (!force_numerical) {
    if (nf.kind() == NFKind::ScaledPower) {
      const double p = nf.exponent();
      const double q = p / (p - 1.0);
      return {nf, NFunction::scaled_power(q), ConjugatePair::Construction::ClosedForm};
    }
    if (nf.kind() == NFKind::Power) {
      // Legendre of t^p is (p-1) (s/p)^{p/(p-1)}.
      const double p = nf.exponent();
      const double q = p / (p - 1.0);
      const double c = (p - 1.0) * std::pow(p, -q);
      return {nf, NFunction(std::make_shared<CoeffPowerImpl>(c, q)),
              ConjugatePair::Construction::ClosedForm};
    }
  }
  return {nf, NFunction(std::make_shared<LegendreImpl>(nf)),
          ConjugatePair::Construction::NumericalLegendre};
}

GrowthIndices simonenko_indices(const NFunction& nf, std::span<const double> t_grid) {
  detail::require(!t_grid.empty(), "simonenko_indices needs a nonempty grid");
  GrowthIndices out;
  out.lower = std::numeric_limits<double>::infinity();
  out.upper = -std::numeric_limits<double>::infinity();
  out.grid.assign(t_grid.begin(), t_grid.end());
  for (double t : t_grid) {
    detail::require(t > 0.0, "simonenko_indices grid entries must be positive");
    const double r = t * nf.density(t) / nf.value(t);
    out.lower = std::min(out.lower, r);
    out.upper = std::max(out.upper, r);
  }
  return out;
}

namespace {

// Shared decade rule: the running sup must not grow by more than 10% between
// the last two decades of the grid.
bool decade_stable(std::span<const double> ts, std::span<const double> ratios) {
  const double tmax = *std::max_element(ts.begin(), ts.end());
  double cut_hi = tmax / 10.0, cut_lo = tmax / 100.0;
  double sup_prev = 0.0, sup_last = 0.0;
  bool any_prev = false, any_last = false;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] > cut_hi) {
      sup_last = std::max(sup_last, ratios[i]);
      any_last = true;
    } else if (ts[i] > cut_lo) {
      sup_prev = std::max(sup_prev, ratios[i]);
      any_prev = true;
    }
  }
  if (!any_prev || !any_last) {
    // Grid narrower than two decades: compare halves instead.
    const double tmin = *std::min_element(ts.begin(), ts.end());
    const double mid = std::sqrt(tmin * tmax);
    sup_prev = sup_last = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i)
      (ts[i] <= mid ? sup_prev : sup_last) = std::max(ts[i] <= mid ? sup_prev : sup_last, ratios[i]);
  }
  return sup_last <= 1.1 * sup_prev;
}

}  // namespace

Delta2Report check_delta2(const NFunction& nf, double t0, std::span<const double> t_grid) {
  detail::require(t0 > 0.0, "check_delta2 requires t0 > 0");
  detail::require(!t_grid.empty(), "check_delta2 needs a nonempty grid");
  std::vector<double> ratios;
  ratios.reserve(t_grid.size());
  double alpha = 0.0;
  for (double t : t_grid) {
    detail::require(t >= t0, "check_delta2 grid entries must be >= t0");
    const double r = nf.value(2.0 * t) / nf.value(t);
    ratios.push_back(r);
    alpha = std::max(alpha, r);
  }
  const bool passes = std::isfinite(alpha) && decade_stable(t_grid, ratios);
  return {passes, alpha, t0};
}

Delta2Report check_delta2(const NFunction& nf) {
  const auto grid = log_grid(1.0, 1e6, 4096);
  return check_delta2(nf, 1.0, grid);
}

DeltaPrimeReport check_delta_prime(const NFunction& nf, std::span<const double> t_grid) {
  detail::require(!t_grid.empty(), "check_delta_prime needs a nonempty grid");
  std::vector<double> ts(t_grid.begin(), t_grid.end());
  if (ts.size() > 256) {  // cap the pair count
    std::vector<double> sub;
    const double stride = static_cast<double>(ts.size() - 1) / 255.0;
    for (int i = 0; i < 256; ++i) sub.push_back(ts[static_cast<std::size_t>(i * stride)]);
    ts = std::move(sub);
  }
  std::vector<double> g(ts.size(), 0.0);
  double c = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (double s : ts) {
      const double r = nf.value(ts[i] * s) / (nf.value(ts[i]) * nf.value(s));
      g[i] = std::max(g[i], r);
    }
    c = std::max(c, g[i]);
  }
  return {std::isfinite(c) && decade_stable(ts, g), c};
}

DominationReport check_domination(const NFunction& c, const NFunction& b,
                                  std::span<const double> k_grid,
                                  std::span<const double> t_grid) {
  detail::require(!k_grid.empty() && !t_grid.empty(), "check_domination needs nonempty grids");
  std::vector<double> ks(k_grid.begin(), k_grid.end());
  std::sort(ks.begin(), ks.end());
  for (double k : ks) {
    bool ok = true;
    for (double t : t_grid) {
      if (c.value(t) > b.value(k * t) * (1.0 + 1e-12)) {
        ok = false;
        break;
      }
    }
    if (ok) return {true, k};
  }
  return {false, std::numeric_limits<double>::quiet_NaN()};
}

std::vector<double> log_grid(double lo, double hi, int n) {
  detail::require(lo > 0.0 && hi > lo && n >= 2, "log_grid requires 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double r = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::exp(r * i);
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace reithom
