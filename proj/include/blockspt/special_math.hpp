#pragma once

// Scalar special functions, adaptive quadrature, characteristic-function
// inversion, and derivative-free minimizers shared by the analytic modules.
//
// Everything here is pure and deterministic: no global state, safe to call
// from any number of threads concurrently.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockspt {

using cplx = std::complex<double>;

/// Thrown when a numeric routine cannot meet its accuracy contract
/// (quadrature budget exhausted, frequency integral not decayed, ...).
/// The CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// Tolerances and budgets for the adaptive quadrature routines.
struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_subdivisions = 4000;
  /// Probability mass ignored when truncating semi-infinite integrals.
  double tail_mass_cutoff = 1e-12;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1)
      throw std::invalid_argument("QuadratureSpec: tolerances must be positive");
    if (!(tail_mass_cutoff > 0.0) || tail_mass_cutoff > 1e-8)
      throw std::invalid_argument("QuadratureSpec: tail_mass_cutoff must lie in (0, 1e-8]");
  }
};

namespace detail {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// log Gamma(x) for x > 0 (thread-safe wrapper; std::lgamma touches signgam).
inline double lgamma_pos(double x) { return std::lgamma(x); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Incomplete gamma / beta
// ---------------------------------------------------------------------------

namespace detail {

/// Lower regularized incomplete gamma by power series; valid for x < a + 1.
inline double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - lgamma_pos(a));
}

/// Upper regularized incomplete gamma by continued fraction (modified Lentz);
/// valid for x >= a + 1.
inline double gamma_cont_frac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - lgamma_pos(a)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x) = (1/Gamma(a)) int_0^x t^{a-1} e^{-t} dt.
/// Monotone nondecreasing in x, P(a, 0) = 0, P(a, +inf) = 1.
inline double reg_lower_gamma(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::domain_error("reg_lower_gamma: requires a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_series(a, x);
  return 1.0 - detail::gamma_cont_frac(a, x);
}

/// Inverse of reg_lower_gamma in x: returns x with P(a, x) = p.
/// p = 1 returns +infinity; p outside [0, 1) is a domain error.
inline double inv_reg_lower_gamma(double a, double p) {
  if (!(a > 0.0)) throw std::domain_error("inv_reg_lower_gamma: requires a > 0");
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (!(p >= 0.0) || p > 1.0)
    throw std::domain_error("inv_reg_lower_gamma: requires p in [0, 1)");
  if (p == 0.0) return 0.0;

  // Bracket the root, then bisect; finish with Newton steps for 1e-12 accuracy.
  double lo = 0.0;
  double hi = a + 10.0;
  while (reg_lower_gamma(a, hi) < p) {
    hi *= 2.0;
    if (hi > 1e8) break;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (reg_lower_gamma(a, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14 * (1.0 + hi)) break;
  }
  double x = 0.5 * (lo + hi);
  const double lga = detail::lgamma_pos(a);
  for (int i = 0; i < 8; ++i) {
    const double f = reg_lower_gamma(a, x) - p;
    const double dens = std::exp((a - 1.0) * std::log(x) - x - lga);
    if (dens <= 0.0) break;
    const double step = f / dens;
    const double xn = x - step;
    if (xn > lo && xn < hi) x = xn;
    if (std::abs(step) < 1e-15 * (1.0 + x)) break;
  }
  return x;
}

/// P(g >= t) for a standard normal g. Strictly decreasing, gauss_tail(0) = 1/2.
inline double gauss_tail(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

/// log P(g >= t): switches to the asymptotic expansion where gauss_tail
/// underflows, so deep tails stay usable in log-domain arithmetic.
inline double log_gauss_tail(double t) {
  if (t < 35.0) return std::log(gauss_tail(t));
  return -0.5 * t * t - std::log(t) - 0.5 * std::log(2.0 * 3.14159265358979323846) +
         std::log1p(-1.0 / (t * t));
}

/// Inverse of gauss_tail on (0, 1): z with P(g >= z) = q.
inline double gauss_tail_inv(double q) {
  if (!(q > 0.0) || !(q < 1.0))
    throw std::domain_error("gauss_tail_inv: requires q in (0, 1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gauss_tail(mid) > q)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

/// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cont_frac(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) = B(x; a, b) / B(a, b).
inline double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0)
    throw std::domain_error("reg_inc_beta: requires a, b > 0 and x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lbeta =
      detail::lgamma_pos(a + b) - detail::lgamma_pos(a) - detail::lgamma_pos(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::beta_cont_frac(a, b, x) / a;
  return 1.0 - std::exp(lbeta + a * std::log(x) + b * std::log1p(-x)) *
                   detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

// ---------------------------------------------------------------------------
// Densities and quantiles used by the expectation integrals
// ---------------------------------------------------------------------------

/// Chi-square density with `dof` degrees of freedom.
inline double chi2_pdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return std::exp((0.5 * dof - 1.0) * std::log(x) - 0.5 * x -
                  0.5 * dof * std::log(2.0) - detail::lgamma_pos(0.5 * dof));
}

/// Chi density (the distribution of the Euclidean norm of `dof` iid standard
/// normals).
inline double chi_pdf(double u, double dof) {
  if (u <= 0.0) return 0.0;
  return std::exp((1.0 - 0.5 * dof) * std::log(2.0) +
                  (dof - 1.0) * std::log(u) - 0.5 * u * u -
                  detail::lgamma_pos(0.5 * dof));
}

/// Chi-square quantile: x with P(chi2(dof) <= x) = p.
inline double chi2_quantile(double dof, double p) {
  return 2.0 * inv_reg_lower_gamma(0.5 * dof, p);
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod quadrature
// ---------------------------------------------------------------------------

namespace detail {

// 15-point Kronrod nodes/weights on [-1, 1] with the embedded 7-point Gauss
// rule (weights on the odd Kronrod nodes).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.000000000000000000000000000000000, 0.207784955007898467600689403773245,
    0.405845151377397166906606412076961, 0.586087235467691130294144838258730,
    0.741531185599394439863864773280788, 0.864864423359769072789712788640926,
    0.949107912342758524526189684047851, 0.991455371120812639206854697526329};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.209482141084727828012999174891714, 0.204432940075298892414161999234649,
    0.190350578064785409913256402421014, 0.169004726639267902826583426598550,
    0.140653259715525918745189590510238, 0.104790010322250183839876322541518,
    0.063092092629978553290700663189204, 0.022935322010529224963732008058970};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.417959183673469387755102040816327, 0.381830050505118944950369775488975,
    0.279705391489276667901467771423780, 0.129484966168869693270611432679082};

template <class T>
struct PanelResult {
  T value;
  double error;
};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const cplx& v) { return std::abs(v); }

/// One Gauss-Kronrod 15(7) evaluation over [lo, hi].
template <class T, class F>
PanelResult<T> gk15(F&& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  T fc = f(c);
  T k15 = kKronrodWeights[0] * fc;
  T g7 = kGaussWeights[0] * fc;
  for (int i = 1; i < 8; ++i) {
    const double dx = h * kKronrodNodes[i];
    T fsum = f(c - dx) + f(c + dx);
    k15 += kKronrodWeights[i] * fsum;
    if (i % 2 == 0) g7 += kGaussWeights[i / 2] * fsum;
  }
  k15 *= h;
  g7 *= h;
  return {k15, magnitude(k15 - g7)};
}

}  // namespace detail

template <class T>
struct IntegralResult {
  T value{};
  double error = 0.0;
  bool converged = true;
};

/// Adaptive Gauss-Kronrod integration of f over [lo, hi]; T = double or cplx.
/// Splits the worst panel until the error estimate meets the tolerances or
/// the subdivision budget runs out (converged = false in that case).
template <class T, class F>
IntegralResult<T> integrate(F&& f, double lo, double hi, const QuadratureSpec& spec) {
  struct Panel {
    double lo, hi, error;
    T value;
  };
  std::vector<Panel> panels;
  auto first = detail::gk15<T>(f, lo, hi);
  panels.push_back({lo, hi, first.error, first.value});
  for (int iter = 0; iter < spec.max_subdivisions; ++iter) {
    T total{};
    double total_err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total += panels[i].value;
      total_err += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    if (total_err <= spec.abs_tol ||
        total_err <= spec.rel_tol * detail::magnitude(total))
      return {total, total_err, true};
    Panel p = panels[worst];
    const double mid = 0.5 * (p.lo + p.hi);
    if (mid <= p.lo || mid >= p.hi) break;  // cannot split further in doubles
    auto left = detail::gk15<T>(f, p.lo, mid);
    auto right = detail::gk15<T>(f, mid, p.hi);
    panels[worst] = {p.lo, mid, left.error, left.value};
    panels.push_back({mid, p.hi, right.error, right.value});
  }
  T total{};
  double total_err = 0.0;
  for (const auto& p : panels) {
    total += p.value;
    total_err += p.error;
  }
  const bool ok = total_err <= spec.abs_tol ||
                  total_err <= spec.rel_tol * detail::magnitude(total);
  return {total, total_err, ok};
}

/// Integrate with interior breakpoints (kinks of the integrand), summing
/// adaptive panels between consecutive points of `pts`.
template <class T, class F>
IntegralResult<T> integrate_with_breaks(F&& f, std::vector<double> pts,
                                        const QuadratureSpec& spec) {
  std::sort(pts.begin(), pts.end());
  IntegralResult<T> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i + 1] > pts[i])) continue;
    auto r = integrate<T>(f, pts[i], pts[i + 1], spec);
    out.value += r.value;
    out.error += r.error;
    out.converged = out.converged && r.converged;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expectation integrals over the two reference densities
// ---------------------------------------------------------------------------

enum class Density { chi_square, normal };

/// E[g(X)] with X ~ chi-square(dof) or standard normal. The base support is
/// truncated at tail_mass_cutoff, then extended in doubling panels until two
/// consecutive panels are negligible — this keeps exponentially tilted g
/// (whose mass reaches beyond the untilted quantile) accurate, and detects
/// divergent tilts. Reports failure if the subdivision budget is exhausted.
inline cplx expectation_integral(Density density, double dof,
                                 const std::function<cplx(double)>& g,
                                 const QuadratureSpec& spec) {
  spec.validate();
  cplx total = 0.0;
  bool ok = true;
  auto add = [&](const std::function<cplx(double)>& f, double a,
                 double b) -> double {
    auto r = integrate<cplx>(f, a, b, spec);
    if (!std::isfinite(std::abs(r.value)))
      throw numeric_error(
          "expectation_integral: non-finite integrand panel (diverging or "
          "over-/underflowing tilt)");
    ok = ok && r.converged;
    total += r.value;
    return std::abs(r.value);
  };
  auto negligible = [&](double contrib) {
    return contrib <= spec.abs_tol + spec.rel_tol * std::abs(total);
  };
  const double support_cap = 1e7;
  if (density == Density::chi_square) {
    std::function<cplx(double)> f = [&](double x) {
      return g(x) * chi2_pdf(x, dof);
    };
    const double hi = chi2_quantile(dof, 1.0 - spec.tail_mass_cutoff);
    add(f, 0.0, hi);
    int quiet = 0;
    for (double a = hi, b = 2.0 * hi; quiet < 2; a = b, b *= 2.0) {
      if (a > support_cap || !std::isfinite(std::abs(total)))
        throw numeric_error("expectation_integral: tail mass does not decay");
      quiet = negligible(add(f, a, b)) ? quiet + 1 : 0;
    }
  } else {
    const double norm = 1.0 / std::sqrt(2.0 * detail::kPi);
    std::function<cplx(double)> f = [&](double x) {
      return g(x) * norm * std::exp(-0.5 * x * x);
    };
    const double z = gauss_tail_inv(0.5 * spec.tail_mass_cutoff);
    add(f, -z, z);
    for (int side = 0; side < 2; ++side) {
      int quiet = 0;
      for (double w = z, step = z; quiet < 2; w += step, step *= 2.0) {
        if (w > support_cap || !std::isfinite(std::abs(total)))
          throw numeric_error("expectation_integral: tail mass does not decay");
        const double c =
            side == 0 ? add(f, w, w + step) : add(f, -(w + step), -w);
        quiet = negligible(c) ? quiet + 1 : 0;
      }
    }
  }
  if (!ok)
    throw numeric_error("expectation_integral: subdivision budget exhausted");
  return total;
}

// ---------------------------------------------------------------------------
// Characteristic-function inversion (Gil-Pelaez)
// ---------------------------------------------------------------------------

/// A characteristic function w -> E e^{jwX}. `tail_bound`, when provided,
/// upper-bounds the remaining inversion mass int_w^inf |phi(t)|/t dt and lets
/// the frequency integral stop as soon as the tail is provably negligible.
struct CharacteristicFunction {
  std::function<cplx(double)> evaluator;
  std::function<double(double)> tail_bound;  // may be empty
};

/// P(X <= x) by the Gil-Pelaez inversion formula
///   P(X <= x) = m/2 - (1/pi) int_0^inf Im[e^{-jwx} phi(w)] / w dw,
/// evaluated over geometrically growing frequency panels until the integrand
/// has decayed. `total_mass` m (= phi(0)) below 1 handles defective measures
/// (restrictions of a distribution to an event). Result clipped to [0, m].
inline double gil_pelaez_cdf(const CharacteristicFunction& phi, double x,
                             const QuadratureSpec& spec,
                             double total_mass = 1.0) {
  spec.validate();
  auto integrand = [&](double w) -> double {
    const cplx val = phi.evaluator(w) * std::exp(cplx(0.0, -w * x));
    return val.imag() / w;
  };
  const double hard_cap = 1e4;
  double w_lo = 0.0, w_hi = 1.0;
  double total = 0.0;
  int quiet_panels = 0;
  bool decayed = false;
  while (w_lo < hard_cap) {
    QuadratureSpec panel_spec = spec;
    panel_spec.abs_tol = std::max(spec.abs_tol * 0.1, 1e-15);
    // The w -> 0 limit of the integrand is finite; start a hair above zero and
    // account for the skipped sliver with a one-sided limit rectangle.
    double lo_eff = w_lo;
    double sliver = 0.0;
    if (w_lo == 0.0) {
      lo_eff = 1e-9;
      sliver = lo_eff * integrand(0.5 * lo_eff);
    }
    auto r = integrate<double>(integrand, lo_eff, w_hi, panel_spec);
    total += r.value + sliver;
    const double mag = std::abs(phi.evaluator(w_hi)) / w_hi;
    if (std::abs(r.value) < spec.abs_tol && mag < 1e-12)
      ++quiet_panels;
    else
      quiet_panels = 0;
    if (quiet_panels >= 2) {
      decayed = true;
      break;
    }
    if (phi.tail_bound && phi.tail_bound(w_hi) < spec.abs_tol) {
      decayed = true;
      break;
    }
    w_lo = w_hi;
    w_hi *= 2.0;
  }
  if (!decayed)
    throw numeric_error(
        "gil_pelaez_cdf: integrand not decayed below tolerance by the "
        "frequency cutoff");
  const double p = 0.5 * total_mass - total / detail::kPi;
  return std::clamp(p, 0.0, total_mass);
}

// ---------------------------------------------------------------------------
// Derivative-free minimizers
// ---------------------------------------------------------------------------

struct Min1DResult {
  double argmin;
  double value;
};

/// Golden-section search for a unimodal f on [lo, hi]; returns the best point
/// found (callers with possibly multimodal f should multi-start).
template <class F>
Min1DResult minimize_1d(F&& f, double lo, double hi, double tol = 1e-10) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  // Guard against boundary minima of monotone f.
  const double fl = f(lo), fh = f(hi);
  if (fl <= fm && fl <= fh) return {lo, fl};
  if (fh <= fm && fh <= fl) return {hi, fh};
  return {xm, fm};
}

struct MinNDResult {
  std::vector<double> argmin;
  double value = std::numeric_limits<double>::infinity();
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

/// One Nelder-Mead run from a given start, candidates clamped into the box.
template <class F>
MinNDResult nelder_mead(F&& f, std::vector<double> start,
                        const std::vector<double>& lo,
                        const std::vector<double>& hi, int max_iter,
                        double ftol) {
  const std::size_t dim = start.size();
  auto clamp_point = [&](std::vector<double>& p) {
    for (std::size_t i = 0; i < dim; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
  };
  clamp_point(start);
  std::vector<std::vector<double>> simplex(dim + 1, start);
  for (std::size_t i = 0; i < dim; ++i) {
    const double span = hi[i] - lo[i];
    double step = (start[i] != 0.0) ? 0.1 * std::abs(start[i]) : 0.05 * span;
    if (step == 0.0) step = 1e-3;
    simplex[i + 1][i] += step;
    clamp_point(simplex[i + 1]);
  }
  std::vector<double> fv(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) fv[i] = f(simplex[i]);

  auto order = [&] {
    std::vector<std::size_t> idx(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> s2(dim + 1);
    std::vector<double> f2(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
      s2[i] = simplex[idx[i]];
      f2[i] = fv[idx[i]];
    }
    simplex.swap(s2);
    fv.swap(f2);
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    order();
    if (std::abs(fv[dim] - fv[0]) <= ftol * (1.0 + std::abs(fv[0]))) break;
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j] / dim;
    auto make = [&](double coef) {
      std::vector<double> p(dim);
      for (std::size_t j = 0; j < dim; ++j)
        p[j] = centroid[j] + coef * (simplex[dim][j] - centroid[j]);
      clamp_point(p);
      return p;
    };
    auto refl = make(-1.0);
    const double frefl = f(refl);
    if (frefl < fv[0]) {
      auto expd = make(-2.0);
      const double fexpd = f(expd);
      if (fexpd < frefl) {
        simplex[dim] = expd;
        fv[dim] = fexpd;
      } else {
        simplex[dim] = refl;
        fv[dim] = frefl;
      }
    } else if (frefl < fv[dim - 1]) {
      simplex[dim] = refl;
      fv[dim] = frefl;
    } else {
      auto contr = make(frefl < fv[dim] ? -0.5 : 0.5);
      const double fcontr = f(contr);
      if (fcontr < std::min(frefl, fv[dim])) {
        simplex[dim] = contr;
        fv[dim] = fcontr;
      } else {
        for (std::size_t i = 1; i <= dim; ++i) {
          for (std::size_t j = 0; j < dim; ++j)
            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
          clamp_point(simplex[i]);
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  order();
  return {simplex[0], fv[0]};
}

}  // namespace detail

struct MinNDOptions {
  int restarts = 5;          // total starts including the caller's
  int max_iter = 600;        // Nelder-Mead iterations per start
  double ftol = 1e-12;
  std::uint64_t seed = 0x5EEDFACE5EEDFACEULL;  // start-point scatter
};

/// Derivative-free simplex search with multi-start inside a box. The first
/// start is the caller's; the remaining ones are deterministic pseudo-random
/// box samples. The best value is monotone nonincreasing across restarts.
template <class F>
MinNDResult minimize_nd(F&& f, const std::vector<double>& start,
                        const std::vector<double>& lo,
                        const std::vector<double>& hi,
                        const MinNDOptions& opts = {}) {
  if (start.size() != lo.size() || lo.size() != hi.size())
    throw std::invalid_argument("minimize_nd: dimension mismatch");
  MinNDResult best;
  std::uint64_t state = opts.seed;
  for (int s = 0; s < std::max(1, opts.restarts); ++s) {
    std::vector<double> x0 = start;
    if (s > 0) {
      for (std::size_t i = 0; i < x0.size(); ++i)
        x0[i] = lo[i] + (hi[i] - lo[i]) * detail::uniform01(state);
    }
    auto r = detail::nelder_mead(f, x0, lo, hi, opts.max_iter, opts.ftol);
    if (r.value < best.value) best = r;
  }
  return best;
}

/// Integer power of a complex number by binary exponentiation — exact branch
/// behavior (no logarithm), used for i.i.d. characteristic-function products.
inline cplx ipow(cplx z, int n) {
  if (n < 0) return 1.0 / ipow(z, -n);
  cplx acc(1.0, 0.0);
  while (n > 0) {
    if (n & 1) acc *= z;
    z *= z;
    n >>= 1;
  }
  return acc;
}

}  // namespace blockspt
