#pragma once

// Chernoff/Gordon-comparison bounds on the block-sparse recovery error event:
// finite-dimensional probability bounds for both tails and their asymptotic
// large-deviation rate functions.
//
// Everything is driven by one decoupled objective: an exponential tilt c3 of
// the Gaussian comparison term plus a dual pair (gamma, lambda) for the
// cone-width program. The per-coordinate moment factors w1/w2/w3 cover the
// three aggregated-coordinate families: chi(d)-distributed magnitudes of the
// zero blocks, signed normals along the support directions, and chi(d-1)
// magnitudes orthogonal to them.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "blockspt/special_math.hpp"
#include "blockspt/types.hpp"

namespace blockspt {

/// Stationary point of the spherical log-moment exponent: the scaled
/// auxiliary variable achieving (1/n) log E exp(-+ c3s sqrt(n) |g|) in the
/// large-system limit. sign == -1 selects the decaying branch (I_sph),
/// sign == +1 the growing branch (I_sph+).
inline double gamma_hat(double c3s, double alpha, int d, int sign) {
  const double disc = std::sqrt(4.0 * c3s * c3s + 16.0 * alpha * d);
  return (2.0 * c3s + (sign < 0 ? -disc : disc)) / 8.0;
}

/// Normalized log-moment of the chi-norm of the M = alpha*d*n measurement
/// channel: I_sph (sign -1, nonpositive) or I_sph+ (sign +1, nonnegative).
inline double i_sph(double c3s, double alpha, int d, int sign) {
  if (c3s == 0.0) return 0.0;
  const double gh = gamma_hat(c3s, alpha, d, sign);
  const double arg = 1.0 - c3s / (2.0 * gh);
  if (!(arg > 0.0))
    throw std::domain_error("i_sph: log argument must be positive");
  return gh * c3s - 0.5 * alpha * d * std::log(arg);
}

namespace detail {

inline double log_chi2_pdf(double h, int dof) {
  return (0.5 * dof - 1.0) * std::log(h) - 0.5 * h -
         0.5 * dof * std::log(2.0) - lgamma_pos(0.5 * dof);
}

/// log of the tilted chi-square(d) moment E exp(s * max(sqrt(h) - lambda, 0)^2)
/// with h ~ chi2(d); s = +rho on the upper tail (finite only for 2*rho < 1),
/// s = -rho on the lower tail. The tilt can push the integrand's mass far
/// beyond the untilted quantiles with individually over-/underflowing
/// factors, so the integrand is assembled in log space and rescaled by its
/// peak before quadrature.
inline double log_w1(double rho, double lambda, int d, bool upper,
                     const QuadratureSpec& spec) {
  const double s = upper ? rho : -rho;
  if (s == 0.0) return 0.0;
  // Asymptotic log-integrand slope is -(1/2 - max(s,0)); a vanishing slope
  // means the moment is diverging for practical purposes.
  const double rate = 0.5 - std::max(s, 0.0);
  if (rate < 5e-4)
    throw numeric_error("log_w1: tilt too close to the divergence boundary");
  const double h_q = chi2_quantile(d, 1.0 - spec.tail_mass_cutoff);
  const double hi =
      1.2 * (h_q + (s > 0.0 ? (40.0 + std::abs((0.5 * d - 1.0)) *
                                          std::log(1.0 + 40.0 / rate)) /
                                  rate
                            : 0.0)) +
      lambda * lambda + 10.0;
  auto logf = [&](double h) {
    const double m = std::max(std::sqrt(h) - lambda, 0.0);
    return s * m * m + log_chi2_pdf(h, d);
  };
  // Peak location over a sqrt-spaced scan (denser near zero where the d=2
  // density has its mode).
  double lmax = -std::numeric_limits<double>::infinity();
  double h_peak = 1.0;
  for (int i = 1; i <= 256; ++i) {
    const double u = double(i) / 256.0;
    const double h = u * u * hi;
    const double l = logf(h);
    if (l > lmax) {
      lmax = l;
      h_peak = h;
    }
  }
  if (!std::isfinite(lmax))
    throw numeric_error("log_w1: integrand peak not finite");
  auto f = [&](double h) -> double {
    if (h <= 0.0) h = 1e-300;  // the d = 2 density is finite at the origin
    return std::exp(logf(h) - lmax);
  };
  std::vector<double> pts = {0.0, lambda * lambda, h_peak, hi};
  auto r = integrate_with_breaks<double>(f, pts, spec);
  if (!r.converged || !(r.value > 0.0))
    throw numeric_error("log_w1: quadrature failed");
  return std::log(r.value) + lmax;
}

inline double log_chi_pdf(double u, int dof) {
  return (1.0 - 0.5 * dof) * std::log(2.0) + (dof - 1.0) * std::log(u) -
         0.5 * u * u - lgamma_pos(0.5 * dof);
}

/// log E exp(c * |g|) with |g| ~ chi(M), c of either sign. The integrand is
/// rescaled by its peak value so the quadrature works on O(1) numbers even
/// when the moment itself under- or overflows.
inline double log_mgf_chi(double c, int M, const QuadratureSpec& spec) {
  if (c == 0.0) return 0.0;
  if (M < 2) throw std::domain_error("log_mgf_chi: requires M >= 2");
  const double ustar = 0.5 * (c + std::sqrt(c * c + 4.0 * (M - 1)));
  const double shift = log_chi_pdf(ustar, M) + c * ustar;
  const double hi = ustar + std::sqrt(double(M)) + 30.0;
  auto f = [&](double u) -> double {
    if (u <= 0.0) return 0.0;
    return std::exp(log_chi_pdf(u, M) + c * u - shift);
  };
  std::vector<double> pts = {0.0, hi};
  if (ustar - 6.0 > 0.0) pts.push_back(ustar - 6.0);
  pts.push_back(ustar);
  pts.push_back(ustar + 6.0);
  auto r = integrate_with_breaks<double>(f, pts, spec);
  if (!r.converged) throw numeric_error("log_mgf_chi: quadrature failed");
  return std::log(r.value) + shift;
}

/// Hazard rate of the standard normal, phi(t) / P(g >= t); increasing in t.
inline double normal_hazard(double t) {
  return std::exp(-0.5 * t * t - 0.5 * std::log(2.0 * kPi) -
                  log_gauss_tail(t));
}

/// Inverse hazard: the t with phi(t)/P(g >= t) = c, c > 0.
inline double normal_hazard_inv(double c) {
  double lo = -40.0, hi = 45.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_hazard(mid) < c ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// The three per-coordinate moment factors (w1, w2, w3) of the decoupled
/// width bound, with their logs. `upper_tail` selects the growing tilt
/// (requires 2*c3s/(4*gammas) < 1); `lower_tail` the decaying one.
struct WTerms {
  double w1 = 1.0, w2 = 1.0, w3 = 1.0;
  double log_w1 = 0.0, log_w2 = 0.0, log_w3 = 0.0;
};

inline WTerms w_terms(const ChernoffParams& params, int d, TailDirection dir,
                      const QuadratureSpec& spec = {}) {
  WTerms out;
  if (params.c3s == 0.0) return out;
  if (!(params.gammas > 0.0))
    throw std::domain_error("w_terms: gammas must be positive");
  if (!(params.lambda >= 0.0))
    throw std::domain_error("w_terms: lambda must be nonnegative");
  const double rho = params.c3s / (4.0 * params.gammas);
  const double lam = params.lambda;
  if (dir == TailDirection::upper_tail) {
    if (!(2.0 * rho < 1.0))
      throw numeric_error(
          "w_terms: upper tail needs 2*c3s/(4*gammas) < 1 for convergence");
    out.log_w1 = detail::log_w1(rho, lam, d, true, spec);
    out.log_w2 =
        rho * lam * lam / (1.0 - 2.0 * rho) - 0.5 * std::log(1.0 - 2.0 * rho);
    out.log_w3 = -0.5 * (d - 1) * std::log(1.0 - 2.0 * rho);
  } else {
    out.log_w1 = detail::log_w1(rho, lam, d, false, spec);
    out.log_w2 =
        -rho * lam * lam / (1.0 + 2.0 * rho) - 0.5 * std::log(1.0 + 2.0 * rho);
    out.log_w3 = -0.5 * (d - 1) * std::log(1.0 + 2.0 * rho);
  }
  out.w1 = std::exp(out.log_w1);
  out.w2 = std::exp(out.log_w2);
  out.w3 = std::exp(out.log_w3);
  return out;
}

// ---------------------------------------------------------------------------
// Asymptotic rate functions
// ---------------------------------------------------------------------------

/// Upper-tail rate objective evaluated at fixed parameters (no optimization):
///   -c3s^2/2 + I_sph + (1-b) log w1 + b log w2 + b log w3 + c3s*gammas.
/// Used both inside rate_upper and to audit published parameter sets.
inline double rate_upper_at(const ChernoffParams& p, double alpha, double beta,
                            int d, const QuadratureSpec& spec = {}) {
  const WTerms w = w_terms(p, d, TailDirection::upper_tail, spec);
  return -0.5 * p.c3s * p.c3s + i_sph(p.c3s, alpha, d, -1) +
         (1.0 - beta) * w.log_w1 + beta * w.log_w2 + beta * w.log_w3 +
         p.c3s * p.gammas;
}

/// Lower-tail rate objective at fixed parameters:
///   -c3s^2/2 + I_sph+ + (1-b) log w1 + b log w2 + b log w3 - c3s*gammas.
inline double rate_lower_at(const ChernoffParams& p, double alpha, double beta,
                            int d, const QuadratureSpec& spec = {}) {
  const WTerms w = w_terms(p, d, TailDirection::lower_tail, spec);
  return -0.5 * p.c3s * p.c3s + i_sph(p.c3s, alpha, d, +1) +
         (1.0 - beta) * w.log_w1 + beta * w.log_w2 + beta * w.log_w3 -
         p.c3s * p.gammas;
}

/// Upper-tail rate bound: the optimized exponent (per block count) of the
/// error probability above the transition. Nonpositive by construction; 0
/// means the bound is vacuous at this (alpha, beta).
inline RateBound rate_upper(double alpha, double beta, int d,
                            const QuadratureSpec& spec = {}) {
  if (!(beta > 0.0) || !(beta < alpha) || !(alpha <= 1.0))
    throw std::domain_error("rate_upper: requires 0 < beta < alpha <= 1");
  const double s = std::sqrt(0.5 * d);  // scale of the chi(d) coordinates
  const double lam_hi = 3.0 * std::sqrt(double(d)) + 2.0;
  // Inner variables (delta, lambda) with gammas = c3s/2 + delta, which keeps
  // the tilt inside its convergence region by construction. The outer tilt
  // c3s is handled by a scan plus golden refinement: the objective is nearly
  // flat along c3s near the optimum, which defeats a joint simplex search.
  const std::vector<double> lo = {1e-6, 0.0};
  const std::vector<double> hi = {6.0 * s, lam_hi};
  MinNDOptions inner_opts;
  inner_opts.restarts = 1;

  struct Inner {
    double value = 0.0;
    double gammas = 0.0, lambda = 0.0;
  };
  std::vector<double> warm = {0.45 * s, 0.7 * s};
  auto inner_min = [&](double c3s) -> Inner {
    if (c3s <= 0.0) return {};
    auto obj = [&](const std::vector<double>& x) -> double {
      ChernoffParams p;
      p.c3s = c3s;
      p.gammas = 0.5 * c3s + x[0];
      p.lambda = x[1];
      try {
        return rate_upper_at(p, alpha, beta, d, spec);
      } catch (const numeric_error&) {
        return 1e9;
      }
    };
    MinNDResult best;
    for (const auto& s0 : std::vector<std::vector<double>>{
             warm, {0.45 * s, 0.7 * s}, {1.4 * s, 0.3 * s}}) {
      auto r = minimize_nd(obj, s0, lo, hi, inner_opts);
      if (r.value < best.value) best = r;
    }
    warm = best.argmin;
    return {best.value, 0.5 * c3s + best.argmin[0], best.argmin[1]};
  };
  auto outer = [&](double c3s) { return inner_min(c3s).value; };

  // Quadratically spaced scan (dense near zero, where the near-transition
  // optima live) followed by a golden refinement between grid neighbors.
  const double c_hi = 12.0;
  const int cells = 24;
  int best_i = 0;
  double best_v = 0.0;
  for (int i = 1; i <= cells; ++i) {
    const double u = double(i) / cells;
    const double v = outer(c_hi * u * u);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  RateBound out;
  out.direction = TailDirection::upper_tail;
  out.alpha = alpha;
  out.beta = beta;
  out.d = d;
  if (best_i > 0) {
    const double c_lo = c_hi * std::pow(double(best_i - 1) / cells, 2);
    const double c_up = c_hi * std::pow(double(best_i + 1) / cells, 2);
    auto r = minimize_1d(outer, c_lo, std::min(c_up, c_hi), 1e-6);
    const Inner in = inner_min(r.argmin);
    if (in.value < 0.0) {
      out.exponent = in.value;
      out.params.c3s = r.argmin;
      out.params.gammas = in.gammas;
      out.params.lambda = in.lambda;
    }
  }
  return out;
}

/// Lower-tail rate bound: the optimized exponent of the probability that
/// recovery still succeeds below the transition. The inner (lambda, gammas)
/// problem is a maximization; the outer tilt c3s is minimized over a coarse
/// grid followed by a golden refinement.
inline RateBound rate_lower(double alpha, double beta, int d,
                            const QuadratureSpec& spec = {}) {
  if (!(beta > 0.0) || !(beta < alpha) || !(alpha <= 1.0))
    throw std::domain_error("rate_lower: requires 0 < beta < alpha <= 1");
  const double s = std::sqrt(0.5 * d);
  const double lam_hi = 3.0 * std::sqrt(double(d)) + 2.0;
  const std::vector<double> lo = {0.0, 1e-6};
  const std::vector<double> hi = {lam_hi, 8.0 * s};

  struct Inner {
    double value = 0.0;
    double lambda = 0.0, gammas = 1.0;
  };
  MinNDOptions inner_opts;
  inner_opts.restarts = 1;
  std::vector<double> warm = {1.0 * s, 0.4 * s};
  auto inner_max = [&](double c3s) -> Inner {
    if (c3s == 0.0) return {};
    auto neg = [&](const std::vector<double>& x) {
      ChernoffParams p;
      p.c3s = c3s;
      p.gammas = x[1];
      p.lambda = x[0];
      const WTerms w = w_terms(p, d, TailDirection::lower_tail, spec);
      return -((1.0 - beta) * w.log_w1 + beta * w.log_w2 + beta * w.log_w3 -
               c3s * x[1]);
    };
    MinNDResult best;
    for (const auto& s0 : std::vector<std::vector<double>>{
             warm, {1.0 * s, 0.4 * s}, {1.5 * s, 0.9 * s}}) {
      auto r = minimize_nd(neg, s0, lo, hi, inner_opts);
      if (r.value < best.value) best = r;
    }
    warm = best.argmin;
    return {-best.value, best.argmin[0], best.argmin[1]};
  };
  auto outer = [&](double c3s) {
    return -0.5 * c3s * c3s + i_sph(c3s, alpha, d, +1) + inner_max(c3s).value;
  };

  const double c_hi = 12.0;
  const int cells = 24;
  int best_i = 0;
  double best_v = 0.0;
  for (int i = 1; i <= cells; ++i) {
    const double u = double(i) / cells;
    const double v = outer(c_hi * u * u);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  RateBound out;
  out.direction = TailDirection::lower_tail;
  out.alpha = alpha;
  out.beta = beta;
  out.d = d;
  if (best_i > 0) {
    const double c_lo = c_hi * std::pow(double(best_i - 1) / cells, 2);
    const double c_up = c_hi * std::pow(double(best_i + 1) / cells, 2);
    auto r = minimize_1d(outer, c_lo, std::min(c_up, c_hi), 1e-7);
    const Inner in = inner_max(r.argmin);
    out.exponent = std::min(0.0, r.value);
    out.params.c3s = r.argmin;
    out.params.gammas = in.gammas;
    out.params.lambda = in.lambda;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-dimensional probability bounds
// ---------------------------------------------------------------------------

/// A finite-dimensional probability bound with its log (kept separately so
/// regimes where the bound underflows remain comparable) and the achieving
/// parameters.
struct FiniteBound {
  double bound = 1.0;
  double log_bound = 0.0;
  ChernoffParams params;
};

/// Upper bound on the probability that the program fails to recover the
/// planted block-sparse solution, at the exact dimensions of `shape`:
///   min_{c3 >= 0} e^{-c3^2/2} E e^{-c3|g|} min_{lambda >= 0, gamma >= c3/2}
///     w1^{n-k} w2^k w3^k e^{c3 gamma},
/// with E e^{-c3|g|} integrated over the chi(M) density. Clipped to [0, 1].
inline FiniteBound finite_perr_upper(const BlockShape& shape,
                                     const QuadratureSpec& spec = {}) {
  shape.validate();
  const int d = shape.d, k = shape.k, n = shape.n, M = shape.M;
  const double s = std::sqrt(0.5 * d);
  const double rn = std::sqrt(double(n));
  const double lam_hi = 3.0 * std::sqrt(double(d)) + 2.0;
  // Same nested scheme as rate_upper (scan + golden over the tilt c3, inner
  // simplex over delta = gamma - c3/2 and lambda): the objective is nearly
  // flat along c3 near its minimum.
  const std::vector<double> lo = {1e-6, 0.0};
  const std::vector<double> hi = {4.0 * s * rn, lam_hi};
  MinNDOptions inner_opts;
  inner_opts.restarts = 1;
  inner_opts.max_iter = 400;

  struct Inner {
    double value = 0.0;
    double gammas = 0.0, lambda = 0.0;
  };
  std::vector<double> warm = {0.35 * s * rn, 0.7 * s};
  auto inner_min = [&](double c3) -> Inner {
    if (c3 <= 0.0) return {};
    auto obj = [&](const std::vector<double>& x) -> double {
      ChernoffParams p;
      p.c3s = c3;
      p.gammas = 0.5 * c3 + x[0];
      p.lambda = x[1];
      try {
        const WTerms w = w_terms(p, d, TailDirection::upper_tail, spec);
        return -0.5 * c3 * c3 + detail::log_mgf_chi(-c3, M, spec) +
               (n - k) * w.log_w1 + k * w.log_w2 + k * w.log_w3 +
               c3 * p.gammas;
      } catch (const numeric_error&) {
        return 1e9;
      }
    };
    MinNDResult best;
    for (const auto& s0 : std::vector<std::vector<double>>{
             warm, {0.35 * s * rn, 0.7 * s}}) {
      auto r = minimize_nd(obj, s0, lo, hi, inner_opts);
      if (r.value < best.value) best = r;
    }
    if (best.value < 1e9) warm = best.argmin;
    return {best.value, 0.5 * c3 + best.argmin[0], best.argmin[1]};
  };
  auto outer = [&](double c3) { return inner_min(c3).value; };

  const double c_hi = 8.0 * rn;
  const int cells = 24;
  int best_i = 0;
  double best_v = 0.0;
  for (int i = 1; i <= cells; ++i) {
    const double u = double(i) / cells;
    const double v = outer(c_hi * u * u);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  FiniteBound out;
  if (best_i > 0) {
    const double c_lo = c_hi * std::pow(double(best_i - 1) / cells, 2);
    const double c_up = c_hi * std::pow(double(best_i + 1) / cells, 2);
    auto r = minimize_1d(outer, c_lo, std::min(c_up, c_hi), 1e-6);
    const Inner in = inner_min(r.argmin);
    if (in.value < 0.0) {
      out.log_bound = in.value;
      out.params.c3s = r.argmin;
      out.params.gammas = in.gammas;
      out.params.lambda = in.lambda;
    }
  }
  out.bound = std::exp(std::min(0.0, out.log_bound));
  return out;
}

/// Upper bound on the probability that recovery succeeds, at the exact
/// dimensions of `shape`:
///   min_{t1} min_{c3 >= 0} E e^{c3|g|} E e^{-c3 w(h,S_w)} e^{-c3 t1} / P(g >= t1),
/// with the width moment factorized through the lower-sign w-terms (maximized
/// over lambda, gamma). For fixed c3 the optimal shift t1 solves
/// hazard(t1) = c3 and is clamped to [-3 sqrt(M), 3 sqrt(M)]. Clipped to [0, 1].
inline FiniteBound finite_pcor_upper(const BlockShape& shape,
                                     const QuadratureSpec& spec = {}) {
  shape.validate();
  const int d = shape.d, k = shape.k, n = shape.n, M = shape.M;
  const double s = std::sqrt(0.5 * d);
  const double lam_hi = 3.0 * std::sqrt(double(d)) + 2.0;
  const double t_box = 3.0 * std::sqrt(double(M));
  const std::vector<double> ilo = {0.0, 1e-6};

  struct Inner {
    double value = 0.0;
    double lambda = 0.0, gammas = 1.0;
  };
  MinNDOptions inner_opts;
  inner_opts.restarts = 1;
  std::vector<double> warm = {1.0 * s, 0.5 * s};
  auto inner_max = [&](double c3) -> Inner {
    if (c3 == 0.0) return {};
    const std::vector<double> ihi = {lam_hi, 8.0 * s + c3};
    auto neg = [&](const std::vector<double>& x) {
      ChernoffParams p;
      p.c3s = c3;
      p.gammas = x[1];
      p.lambda = x[0];
      const WTerms w = w_terms(p, d, TailDirection::lower_tail, spec);
      return -((n - k) * w.log_w1 + k * w.log_w2 + k * w.log_w3 - c3 * x[1]);
    };
    MinNDResult best;
    for (const auto& s0 : std::vector<std::vector<double>>{
             warm, {1.0 * s, 0.5 * s}, {1.4 * s, 1.5 * s}}) {
      auto r = minimize_nd(neg, s0, ilo, ihi, inner_opts);
      if (r.value < best.value) best = r;
    }
    warm = best.argmin;
    return {-best.value, best.argmin[0], best.argmin[1]};
  };
  // For fixed c3 the optimal shift solves hazard(t1) = c3, independently of
  // the width terms.
  auto t1_star = [&](double c3) {
    if (c3 <= 0.0) return -t_box;
    return std::clamp(detail::normal_hazard_inv(c3), -t_box, t_box);
  };
  auto outer = [&](double c3) -> double {
    const double t1 = t1_star(c3);
    double v = -c3 * t1 - log_gauss_tail(t1);
    if (c3 > 0.0) v += detail::log_mgf_chi(c3, M, spec) + inner_max(c3).value;
    return v;
  };

  const double c_hi = 7.0 * std::sqrt(double(n));
  const int cells = 24;
  int best_i = 0;
  double best_v = outer(0.0);
  for (int i = 1; i <= cells; ++i) {
    const double u = double(i) / cells;
    const double v = outer(c_hi * u * u);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  FiniteBound out;
  if (best_i > 0) {
    const double c_lo = c_hi * std::pow(double(best_i - 1) / cells, 2);
    const double c_up = c_hi * std::pow(double(best_i + 1) / cells, 2);
    auto r = minimize_1d(outer, c_lo, std::min(c_up, c_hi), 1e-6);
    const Inner in = inner_max(r.argmin);
    out.log_bound = std::min(0.0, r.value);
    out.params.c3s = r.argmin;
    out.params.gammas = in.gammas;
    out.params.lambda = in.lambda;
    out.params.t1 = t1_star(r.argmin);
  } else {
    out.params.t1 = t1_star(0.0);
    out.log_bound = std::min(0.0, best_v);
  }
  out.bound = std::exp(out.log_bound);
  return out;
}

}  // namespace blockspt
