#include "reithom/flux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reithom/parallel.hpp"

namespace reithom {

DegenerateWeight DegenerateWeight::constant(double h0) {
  detail::require(h0 > 0.0 && h0 < 1.0, "constant weight must lie in (0,1)");
  DegenerateWeight w;
  w.h = [h0](double) { return h0; };
  w.h_min = h0;
  return w;
}

DegenerateWeight DegenerateWeight::from_expression(const Expression& e, double h_min) {
  DegenerateWeight w;
  w.h = [e](double t) { return e(t); };
  w.h_min = h_min;
  w.validate();
  return w;
}

void DegenerateWeight::validate() const {
  detail::require(h_min > 0.0, "weight lower bound must be positive");
  detail::require(h(0.0) < 1.0, "weight must satisfy h(0) < 1");
  double prev = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t <= 64.0; t += 0.25) {
    const double v = h(t);
    detail::require(v >= h_min, "weight drops below its declared lower bound");
    detail::require(v < 1.0, "weight must stay below 1");
    detail::require(v <= prev * (1.0 + 1e-12), "weight must be nonincreasing");
    prev = v;
  }
}

struct FluxCoefficient::Data {
  Setup s;
  NFunction phi_dual;               // conj(Phi), for g(s) and theta
  double theta = 0.0;
  Data(Setup setup, NFunction dual) : s(std::move(setup)), phi_dual(std::move(dual)) {}
};

FluxCoefficient::FluxCoefficient(Setup s) {
  detail::require(s.dim == 1 || s.dim == 2, "flux dimension must be 1 or 2");
  detail::require(static_cast<bool>(s.eval), "flux needs an evaluation map");
  s.weight.validate();
  NFunction dual = conjugate(s.phi).dual;
  auto data = std::make_shared<Data>(std::move(s), std::move(dual));
  data->theta = data->phi_dual.inverse(data->s.phi.value(data->s.weight.h_min));
  data_ = std::move(data);
}

Vec FluxCoefficient::operator()(const Vec& y, const Vec& z, double zeta, const Vec& lambda) const {
  return data_->s.eval(y, z, zeta, lambda);
}

Mat FluxCoefficient::d_lambda(const Vec& y, const Vec& z, double zeta, const Vec& lambda) const {
  if (data_->s.d_lambda) return data_->s.d_lambda(y, z, zeta, lambda);
  const int d = data_->s.dim;
  Mat m;
  m.dim = d;
  for (int j = 0; j < d; ++j) {
    const double step = std::max(1e-7, 1e-7 * std::abs(lambda[j]));
    Vec lp = lambda, lm = lambda;
    lp[j] += step;
    lm[j] -= step;
    const Vec fp = data_->s.eval(y, z, zeta, lp);
    const Vec fm = data_->s.eval(y, z, zeta, lm);
    for (int i = 0; i < d; ++i) m(i, j) = (fp[i] - fm[i]) / (2.0 * step);
  }
  return m;
}

bool FluxCoefficient::has_analytic_d_lambda() const { return static_cast<bool>(data_->s.d_lambda); }

Vec FluxCoefficient::d_zeta(const Vec& y, const Vec& z, double zeta, const Vec& lambda) const {
  if (!data_->s.zeta_dependent) return Vec::zero(data_->s.dim);
  const double step = std::max(1e-7, 1e-7 * std::abs(zeta));
  const Vec fp = data_->s.eval(y, z, zeta + step, lambda);
  const Vec fm = data_->s.eval(y, z, zeta - step, lambda);
  Vec g = Vec::zero(data_->s.dim);
  for (int i = 0; i < data_->s.dim; ++i) g[i] = (fp[i] - fm[i]) / (2.0 * step);
  return g;
}

int FluxCoefficient::dim() const { return data_->s.dim; }
bool FluxCoefficient::periodic() const { return data_->s.periodic; }
bool FluxCoefficient::zeta_dependent() const { return data_->s.zeta_dependent; }
const NFunction& FluxCoefficient::phi() const { return data_->s.phi; }
const NFunction& FluxCoefficient::psi() const { return data_->s.psi; }
const DegenerateWeight& FluxCoefficient::weight() const { return data_->s.weight; }
const std::vector<double>& FluxCoefficient::y_interfaces(int axis) const {
  return data_->s.y_interfaces[axis];
}
const std::vector<double>& FluxCoefficient::z_interfaces(int axis) const {
  return data_->s.z_interfaces[axis];
}
const std::string& FluxCoefficient::family() const { return data_->s.family; }
double FluxCoefficient::theta() const { return data_->theta; }

namespace {

// Positive lower/upper bounds of a cell coefficient, sampled densely.
std::pair<double, double> coefficient_range(const Expression& e, int dim) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const int n = dim == 1 ? 4096 : 128;
  for (int i = 0; i < n; ++i) {
    const double u = -0.5 + (i + 0.37) / n;
    if (dim == 1) {
      const double v = e(Vec(u));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    } else {
      for (int j = 0; j < n; ++j) {
        const double w = -0.5 + (j + 0.61) / n;
        const double v = e(Vec(u, w));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  detail::require(lo > 0.0, "coefficient must be positive on the unit cell");
  detail::require(std::isfinite(hi), "coefficient must be bounded on the unit cell");
  return {lo, hi};
}

void gather_interfaces(const Expression& e, char letter, int dim, std::vector<double>* out) {
  for (int a = 0; a < dim; ++a) out[a] = e.breakpoints(letter, a);
}

}  // namespace

FluxCoefficient make_linear_separable(int dim, const Expression& c_y, const Expression& c_z) {
  coefficient_range(c_y, dim);
  coefficient_range(c_z, dim);
  FluxCoefficient::Setup s;
  s.dim = dim;
  s.family = "linear_separable";
  s.phi = NFunction::scaled_power(2.0);
  s.psi = NFunction::scaled_power(2.0);
  s.eval = [c_y, c_z](const Vec& y, const Vec& z, double, const Vec& lambda) {
    return c_y(y) * c_z(z) * lambda;
  };
  s.d_lambda = [c_y, c_z](const Vec& y, const Vec& z, double, const Vec& lambda) {
    return Mat::identity(lambda.dim, c_y(y) * c_z(z));
  };
  gather_interfaces(c_y, 'y', dim, s.y_interfaces);
  gather_interfaces(c_z, 'z', dim, s.z_interfaces);
  return FluxCoefficient(std::move(s));
}

namespace {

// phi(|lambda|) lambda / |lambda| and its Jacobian
//   c [ phi(t)/t (I - n n^T) + phi'(t) n n^T ],  t = |lambda|, n = lambda/t.
Vec phi_flux(const NFunction& nf, double c, const Vec& lambda) {
  const double t = lambda.norm();
  if (t == 0.0) return Vec::zero(lambda.dim);
  return (c * nf.density(t) / t) * lambda;
}

Mat phi_flux_jacobian(const NFunction& nf, double c, const Vec& lambda) {
  const int d = lambda.dim;
  const double t = std::max(lambda.norm(), 1e-14);
  const double secant = nf.density(t) / t;
  const double tangent = nf.second_derivative(t);
  Mat m = Mat::identity(d, c * secant);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) += c * (tangent - secant) * (lambda[i] / t) * (lambda[j] / t);
  return m;
}

}  // namespace

FluxCoefficient make_phi_laplacian(int dim, const NFunction& nf, const Expression& c_y,
                                   const Expression& c_z) {
  coefficient_range(c_y, dim);
  coefficient_range(c_z, dim);
  FluxCoefficient::Setup s;
  s.dim = dim;
  s.family = "phi_laplacian";
  s.phi = nf;
  s.psi = nf;
  s.eval = [nf, c_y, c_z](const Vec& y, const Vec& z, double, const Vec& lambda) {
    return phi_flux(nf, c_y(y) * c_z(z), lambda);
  };
  if (nf.has_second_derivative()) {
    s.d_lambda = [nf, c_y, c_z](const Vec& y, const Vec& z, double, const Vec& lambda) {
      return phi_flux_jacobian(nf, c_y(y) * c_z(z), lambda);
    };
  }
  gather_interfaces(c_y, 'y', dim, s.y_interfaces);
  gather_interfaces(c_z, 'z', dim, s.z_interfaces);
  return FluxCoefficient(std::move(s));
}

FluxCoefficient make_degenerate(int dim, const NFunction& nf, const Expression& c_y,
                                const Expression& c_z, DegenerateWeight w) {
  coefficient_range(c_y, dim);
  coefficient_range(c_z, dim);
  w.validate();
  const NFunction dual = conjugate(nf).dual;
  // g(s) = conj(Phi)^{-1}(Phi(s)), increasing; g(h(|zeta|)) damps the flux.
  auto g = [nf, dual](double s) { return dual.inverse(nf.value(s)); };
  FluxCoefficient::Setup s;
  s.dim = dim;
  s.family = "degenerate";
  s.phi = nf;
  s.psi = nf;
  s.zeta_dependent = true;
  s.weight = w;
  s.eval = [nf, c_y, c_z, g, w](const Vec& y, const Vec& z, double zeta, const Vec& lambda) {
    return phi_flux(nf, c_y(y) * c_z(z) * g(w.h(std::abs(zeta))), lambda);
  };
  if (nf.has_second_derivative()) {
    s.d_lambda = [nf, c_y, c_z, g, w](const Vec& y, const Vec& z, double zeta, const Vec& lambda) {
      return phi_flux_jacobian(nf, c_y(y) * c_z(z) * g(w.h(std::abs(zeta))), lambda);
    };
  }
  gather_interfaces(c_y, 'y', dim, s.y_interfaces);
  gather_interfaces(c_z, 'z', dim, s.z_interfaces);
  return FluxCoefficient(std::move(s));
}

// ---------------------------------------------------------------------------
// Hypothesis verifier
// ---------------------------------------------------------------------------

namespace {

struct SampleTuple {
  Vec y, z;
  double zeta, zeta2;
  Vec lambda, lambda2;
};

// Deterministic uniform doubles independent of the standard library's
// distribution implementations.
struct Uniform {
  std::uint64_t state;
  explicit Uniform(std::uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ULL) {}
  double next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  }
  double range(double lo, double hi) { return lo + (hi - lo) * next(); }
};

double wrapped_distance(double coord, const std::vector<double>& interfaces) {
  double best = std::numeric_limits<double>::infinity();
  const double c = detail::wrap_cell(coord);
  for (double b : interfaces) {
    double d = std::abs(c - b);
    d = std::min(d, 1.0 - d);
    best = std::min(best, d);
  }
  return best;
}

void fill_witness(HypothesisEntry& e, const SampleTuple& s) {
  e.witness = {s.y[0], s.y.dim > 1 ? s.y[1] : 0.0, s.z[0], s.z.dim > 1 ? s.z[1] : 0.0,
               s.zeta,  s.zeta2, s.lambda[0], s.lambda.dim > 1 ? s.lambda[1] : 0.0,
               s.lambda2[0], s.lambda2.dim > 1 ? s.lambda2[1] : 0.0};
}

struct ShardResult {
  double h1_margin = std::numeric_limits<double>::infinity();
  double h3_margin = std::numeric_limits<double>::infinity();
  double h4_margin = std::numeric_limits<double>::infinity();
  double h5i_margin = std::numeric_limits<double>::infinity();
  double h5ii_margin = std::numeric_limits<double>::infinity();
  double c1 = 0.0, c3 = 0.0;
  double c5 = std::numeric_limits<double>::infinity();
  SampleTuple w_h1{}, w_h3{}, w_h4{}, w_h5i{}, w_h5ii{}, w_h6{};
};

}  // namespace

bool HypothesisReport::all_passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const HypothesisEntry& e) { return e.passed; });
}

const HypothesisEntry& HypothesisReport::entry(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw std::invalid_argument("no hypothesis entry named " + name);
}

HypothesisReport verify_hypotheses(const FluxCoefficient& a, const SamplerOptions& opts) {
  detail::require(opts.n_points > 0, "sampler needs n_points > 0");
  const int d = a.dim();
  const NFunction& phi = a.phi();
  const NFunction phi_dual = conjugate(phi).dual;
  const NFunction psi_dual = conjugate(a.psi()).dual;
  const auto g_of = [&](double s) { return phi_dual.inverse(phi.value(s)); };

  // All tuples come from one deterministic stream; the merged report is
  // identical for any worker count.
  const double delta0 = 0.02;
  std::vector<SampleTuple> samples(static_cast<std::size_t>(opts.n_points));
  {
    Uniform rng(opts.seed);
    const auto draw_clear = [&](const std::vector<double>* interfaces) {
      Vec p = Vec::zero(d);
      for (int attempt = 0; attempt < 64; ++attempt) {
        bool clear = true;
        for (int c = 0; c < d; ++c) {
          p[c] = rng.range(-0.5, 0.5);
          if (!interfaces[c].empty() && wrapped_distance(p[c], interfaces[c]) < 2.0 * delta0)
            clear = false;
        }
        if (clear) break;
      }
      return p;
    };
    std::vector<double> y_if[kMaxDim], z_if[kMaxDim];
    for (int c = 0; c < d; ++c) {
      y_if[c] = a.y_interfaces(c);
      z_if[c] = a.z_interfaces(c);
    }
    for (auto& s : samples) {
      s.y = draw_clear(y_if);
      s.z = draw_clear(z_if);
      s.zeta = rng.range(-opts.zeta_range, opts.zeta_range);
      s.zeta2 = rng.range(-opts.zeta_range, opts.zeta_range);
      s.lambda = Vec::zero(d);
      s.lambda2 = Vec::zero(d);
      for (int c = 0; c < d; ++c) {
        s.lambda[c] = rng.range(-opts.lambda_range, opts.lambda_range);
        s.lambda2[c] = rng.range(-opts.lambda_range, opts.lambda_range);
      }
    }
  }

  const int workers = worker_count(opts.workers);
  std::vector<ShardResult> shards(static_cast<std::size_t>(
      std::min<long>(std::max(1, workers), opts.n_points)));

  parallel_chunks(opts.n_points, workers, [&](int w, long b, long e) {
    ShardResult& r = shards[static_cast<std::size_t>(w)];
    for (long i = b; i < e; ++i) {
      const SampleTuple& s = samples[static_cast<std::size_t>(i)];
      const Vec a_base = a(s.y, s.z, s.zeta, s.lambda);
      const double scale = 1.0 + a_base.norm();

      // H1: continuity in z. Halving steps must shrink the difference below
      // the running max; near a coefficient extremum the first step can land
      // back on a level set, so e_0 alone is not a usable scale.
      for (int axis = 0; axis < d; ++axis) {
        double e_max = 0.0, e_last = 0.0;
        for (int k = 0; k <= 4; ++k) {
          Vec zs = s.z;
          zs[axis] += delta0 / (1 << k);
          const double diff = (a(s.y, zs, s.zeta, s.lambda) - a_base).norm();
          if (k < 4) e_max = std::max(e_max, diff);
          e_last = diff;
        }
        const double margin = 0.75 * e_max + 1e-12 * scale - e_last;
        if (margin < r.h1_margin) {
          r.h1_margin = margin;
          r.w_h1 = s;
        }
      }

      // H5(ii): same ratio test in y.
      for (int axis = 0; axis < d; ++axis) {
        double e_max = 0.0, e_last = 0.0;
        for (int k = 0; k <= 4; ++k) {
          Vec ys = s.y;
          ys[axis] += delta0 / (1 << k);
          const double diff = (a(ys, s.z, s.zeta, s.lambda) - a_base).norm();
          if (k < 4) e_max = std::max(e_max, diff);
          e_last = diff;
        }
        const double margin = 0.75 * e_max + 1e-12 * scale - e_last;
        if (margin < r.h5ii_margin) {
          r.h5ii_margin = margin;
          r.w_h5ii = s;
        }
      }

      // H5(i): exact periodicity under integer shifts.
      {
        Uniform shift_rng(opts.seed * 7919 + static_cast<std::uint64_t>(i));
        Vec ys = s.y, zs = s.z;
        for (int c = 0; c < d; ++c) {
          ys[c] += std::floor(shift_rng.range(-2.0, 3.0));
          zs[c] += std::floor(shift_rng.range(-2.0, 3.0));
        }
        const double diff = (a(ys, zs, s.zeta, s.lambda) - a_base).norm();
        const double margin = 1e-12 * scale - diff;
        if (margin < r.h5i_margin) {
          r.h5i_margin = margin;
          r.w_h5i = s;
        }
      }

      // H2 constants: c1 from zeta-only pairs, c3 from lambda-only pairs.
      {
        const Vec a_zeta = a(s.y, s.z, s.zeta2, s.lambda);
        const double dz = std::abs(s.zeta - s.zeta2);
        if (dz > 1e-12) {
          const double den = psi_dual.inverse(phi.value(dz));
          if (den > 1e-300) r.c1 = std::max(r.c1, (a_base - a_zeta).norm() / den);
        }
        const Vec a_lam = a(s.y, s.z, s.zeta, s.lambda2);
        const double dl = (s.lambda - s.lambda2).norm();
        if (dl > 1e-12) {
          const double den = phi_dual.inverse(phi.value(dl));
          if (den > 1e-300) r.c3 = std::max(r.c3, (a_base - a_lam).norm() / den);
        }
      }

      // H3: coercivity margin against the declared weight.
      {
        const double t = s.lambda.norm();
        const double margin =
            a_base.dot(s.lambda) - g_of(a.weight().h(std::abs(s.zeta))) * phi.value(t);
        if (margin < r.h3_margin) {
          r.h3_margin = margin;
          r.w_h3 = s;
        }
      }

      // H4: monotonicity at equal zeta.
      {
        const Vec a2 = a(s.y, s.z, s.zeta, s.lambda2);
        const double margin = (a_base - a2).dot(s.lambda - s.lambda2);
        if (margin < r.h4_margin) {
          r.h4_margin = margin;
          r.w_h4 = s;
        }
      }

      // H6: fitted strong-monotonicity constant over independent zeta pairs.
      {
        const Vec a2 = a(s.y, s.z, s.zeta2, s.lambda2);
        const double dl = (s.lambda - s.lambda2).norm();
        const double den = phi.value(dl);
        if (den > 1e-14) {
          const double ratio = (a_base - a2).dot(s.lambda - s.lambda2) / den;
          if (ratio < r.c5) {
            r.c5 = ratio;
            r.w_h6 = s;
          }
        }
      }
    }
  });

  // Deterministic merge in shard (index) order.
  ShardResult m;
  for (const auto& r : shards) {
    if (r.h1_margin < m.h1_margin) { m.h1_margin = r.h1_margin; m.w_h1 = r.w_h1; }
    if (r.h3_margin < m.h3_margin) { m.h3_margin = r.h3_margin; m.w_h3 = r.w_h3; }
    if (r.h4_margin < m.h4_margin) { m.h4_margin = r.h4_margin; m.w_h4 = r.w_h4; }
    if (r.h5i_margin < m.h5i_margin) { m.h5i_margin = r.h5i_margin; m.w_h5i = r.w_h5i; }
    if (r.h5ii_margin < m.h5ii_margin) { m.h5ii_margin = r.h5ii_margin; m.w_h5ii = r.w_h5ii; }
    m.c1 = std::max(m.c1, r.c1);
    m.c3 = std::max(m.c3, r.c3);
    if (r.c5 < m.c5) { m.c5 = r.c5; m.w_h6 = r.w_h6; }
  }

  // Second pass for the H2 margin with the fitted constants (5% slack absorbs
  // single-variable fits missing the worst mixed pair).
  double h2_margin = std::numeric_limits<double>::infinity();
  SampleTuple w_h2{};
  for (const auto& s : samples) {
    const Vec a_base = a(s.y, s.z, s.zeta, s.lambda);
    const Vec a_both = a(s.y, s.z, s.zeta2, s.lambda2);
    const double dz = std::abs(s.zeta - s.zeta2);
    const double dl = (s.lambda - s.lambda2).norm();
    const double rhs = 1.05 * (m.c1 * psi_dual.inverse(phi.value(dz)) +
                               m.c3 * phi_dual.inverse(phi.value(dl)));
    const double margin = rhs - (a_base - a_both).norm();
    if (margin < h2_margin) {
      h2_margin = margin;
      w_h2 = s;
    }
  }

  HypothesisReport report;
  report.theta = a.theta();
  report.c1 = m.c1;
  report.c3 = m.c3;
  report.c5 = std::isfinite(m.c5) ? m.c5 : 0.0;

  const double tol = opts.tol;
  auto push = [&](const std::string& name, bool passed, double margin, const SampleTuple& w) {
    HypothesisEntry e;
    e.name = name;
    e.passed = passed;
    e.worst_margin = margin;
    fill_witness(e, w);
    report.entries.push_back(std::move(e));
  };
  push("H1", m.h1_margin >= -tol, m.h1_margin, m.w_h1);
  push("H2", std::isfinite(m.c1) && std::isfinite(m.c3) && h2_margin >= -tol, h2_margin, w_h2);
  push("H3", m.h3_margin >= -tol, m.h3_margin, m.w_h3);
  push("H4", m.h4_margin >= -tol, m.h4_margin, m.w_h4);
  push("H5", m.h5i_margin >= -tol && m.h5ii_margin >= -tol,
       std::min(m.h5i_margin, m.h5ii_margin),
       m.h5i_margin <= m.h5ii_margin ? m.w_h5i : m.w_h5ii);
  push("H6", report.c5 > 0.0, report.c5, m.w_h6);
  return report;
}

}  // namespace reithom
