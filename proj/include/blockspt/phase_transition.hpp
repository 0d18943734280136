#pragma once

// Asymptotic weak phase-transition curve for block-sparse recovery: the
// measurement ratio alpha_w(beta, d) above which the convex program recovers
// a beta-fraction of nonzero blocks with overwhelming probability, in the
// large-system limit.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "blockspt/special_math.hpp"

namespace blockspt {

/// One point of the weak transition curve.
struct PTPoint {
  int d = 2;
  double beta_w = 0.0;
  double theta_hat = 0.0;  // auxiliary root in [beta_w, 1]
  double alpha_w = 0.0;    // critical measurement ratio M/(d n)
};

namespace detail {

/// Ratio of Gamma((d+s)/2) to Gamma(d/2) without overflow.
inline double gamma_ratio_half(int d, double s) {
  return std::exp(lgamma_pos(0.5 * (d + s)) - lgamma_pos(0.5 * d));
}

/// The scalar root equation F(theta) whose zero defines the auxiliary
/// threshold parameter. Built from chi-square tail moments: q is the
/// chi-square(d)/2 quantile at mass (1-theta)/(1-beta).
inline double theta_equation(double theta, double beta, int d) {
  const double p = (1.0 - theta) / (1.0 - beta);
  const double q = inv_reg_lower_gamma(0.5 * d, p);
  const double a1 = std::sqrt(2.0) * gamma_ratio_half(d, 1.0);
  const double m1 = (1.0 - beta) * a1 * (1.0 - reg_lower_gamma(0.5 * (d + 1), q));
  return m1 / theta - std::sqrt(2.0 * q);
}

}  // namespace detail

/// Root theta_hat in [beta_w, 1] of the threshold equation, found by a dense
/// sign scan followed by bisection (robust against non-unimodal F), refined
/// to 1e-12. Throws numeric_error if no sign change is found (a bug signal,
/// not an expected outcome).
inline double solve_theta_hat(double beta_w, int d) {
  if (!(beta_w > 0.0) || !(beta_w < 1.0))
    throw std::domain_error("solve_theta_hat: beta_w must lie in (0, 1)");
  if (d < 1) throw std::domain_error("solve_theta_hat: d must be >= 1");
  const double lo_lim = beta_w + 1e-12;
  const double hi_lim = 1.0 - 1e-12;
  auto F = [&](double t) {
    return detail::theta_equation(std::clamp(t, lo_lim, hi_lim), beta_w, d);
  };
  // Dense scan for a bracketing sign change.
  const int scan = 1000;
  double lo = lo_lim, hi = hi_lim;
  double flo = F(lo);
  bool found = false;
  for (int i = 1; i <= scan; ++i) {
    const double t = lo_lim + (hi_lim - lo_lim) * i / scan;
    const double ft = F(t);
    if ((flo <= 0.0 && ft >= 0.0) || (flo >= 0.0 && ft <= 0.0)) {
      hi = t;
      found = true;
      break;
    }
    lo = t;
    flo = ft;
  }
  if (!found) {
    // Near beta -> 1 the bracket collapses and F stays one-signed inside the
    // clamped interval; the root degenerates to the upper endpoint.
    if (std::abs(F(hi_lim)) < std::abs(F(lo_lim))) return hi_lim;
    throw numeric_error("solve_theta_hat: no sign change of F on [beta, 1]");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = F(mid);
    if ((flo <= 0.0 && fm <= 0.0) || (flo >= 0.0 && fm >= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13) break;
  }
  return 0.5 * (lo + hi);
}

/// The weak-threshold measurement ratio alpha_w for sparsity ratio beta_w and
/// block length d, with the auxiliary root it was computed from.
inline PTPoint alpha_weak(double beta_w, int d) {
  const double theta = solve_theta_hat(beta_w, d);
  const double p = (1.0 - theta) / (1.0 - beta_w);
  const double q = inv_reg_lower_gamma(0.5 * d, std::clamp(p, 0.0, 1.0 - 1e-15));
  const double a1 = std::sqrt(2.0) * detail::gamma_ratio_half(d, 1.0);
  const double a2 = 2.0 * detail::gamma_ratio_half(d, 2.0);
  const double m1 =
      (1.0 - beta_w) * a1 * (1.0 - reg_lower_gamma(0.5 * (d + 1), q));
  const double m2 =
      (1.0 - beta_w) * a2 * (1.0 - reg_lower_gamma(0.5 * (d + 2), q));
  const double alpha_d = m2 + beta_w * d - m1 * m1 / theta;
  PTPoint pt;
  pt.d = d;
  pt.beta_w = beta_w;
  pt.theta_hat = theta;
  pt.alpha_w = std::clamp(alpha_d / d, 1e-300, 1.0);
  return pt;
}

/// Weak transition curve over a strictly increasing beta grid. Grid points
/// whose root finding fails are skipped and reported.
struct PTCurve {
  std::vector<PTPoint> points;
  std::vector<std::pair<double, std::string>> skipped;  // (beta, reason)
};

inline PTCurve pt_curve(int d, const std::vector<double>& beta_grid) {
  PTCurve out;
  for (std::size_t i = 0; i < beta_grid.size(); ++i) {
    const double b = beta_grid[i];
    if (!(b > 0.0) || !(b < 1.0))
      throw std::invalid_argument("pt_curve: grid values must lie in (0, 1)");
    if (i > 0 && !(b > beta_grid[i - 1]))
      throw std::invalid_argument("pt_curve: grid must be strictly increasing");
    try {
      out.points.push_back(alpha_weak(b, d));
    } catch (const numeric_error& e) {
      out.skipped.emplace_back(b, e.what());
    }
  }
  return out;
}

/// Inverse of alpha_weak in beta by monotone bisection: the largest sparsity
/// ratio recoverable at measurement ratio alpha. Returns 0 if alpha is below
/// the smallest representable transition.
inline double beta_weak_of_alpha(double alpha, int d) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::domain_error("beta_weak_of_alpha: alpha must lie in (0, 1]");
  double lo = 1e-9, hi = 1.0 - 1e-9;
  if (alpha_weak(lo, d).alpha_w >= alpha) return 0.0;
  if (alpha_weak(hi, d).alpha_w <= alpha) return hi;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (alpha_weak(mid, d).alpha_w < alpha)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-9) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace blockspt
