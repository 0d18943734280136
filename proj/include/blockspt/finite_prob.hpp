#pragma once

// Aggregation-free finite-dimensional upper bound on the recovery error
// probability: conditions the Gordon comparison on |g| >= t1 and inverts the
// characteristic function of w_lambda(h)^2 - (t1 + |g|)^2 directly, with no
// exponential tilting. Complements the Chernoff-style finite bound.

#include <algorithm>
#include <cmath>
#include <vector>

#include "blockspt/integral_geometry.hpp"
#include "blockspt/special_math.hpp"
#include "blockspt/types.hpp"

namespace blockspt {

/// Truncated characteristic-function factor of the shifted chi-square norm:
///   E[ e^{-j w (t1 + sqrt(z))^2} ; z >= max(-t1, 0)^2 ],  z ~ chi2(M).
/// Modulus at most 1; equals the surviving mass at w = 0.
inline cplx i_lambda4(double w_f, double t1, int M,
                      const QuadratureSpec& spec = {}) {
  if (M < 1) throw std::domain_error("i_lambda4: requires M >= 1");
  spec.validate();
  const double z_lo = std::pow(std::max(-t1, 0.0), 2);
  const double z_hi =
      std::max(z_lo + 1.0, chi2_quantile(M, 1.0 - spec.tail_mass_cutoff));
  if (z_lo >= z_hi) return {0.0, 0.0};
  const cplx j(0.0, 1.0);
  auto f = [&](double z) -> cplx {
    const double a = t1 + std::sqrt(z);
    return std::exp(-j * w_f * a * a) * chi2_pdf(z, M);
  };
  auto r = integrate<cplx>(f, z_lo, z_hi, spec);
  if (!r.converged) throw numeric_error("i_lambda4: quadrature failed");
  return r.value;
}

namespace detail {

/// Assembles the defective characteristic function of
/// w_lambda(h)^2 - (t1 + |g|)^2 restricted to t1 + |g| >= 0: the width
/// factors at eps = pi/2 with negated frequency times the truncated factor.
inline CharacteristicFunction ag_cf(const BlockShape& shape, double lambda,
                                    double t1, const QuadratureSpec& spec) {
  const auto width_cf = cap_cf(shape.d, shape.k, shape.n, lambda,
                               /*cos2=*/0.0, spec);
  CharacteristicFunction phi;
  phi.evaluator = [=, M = shape.M](double w) -> cplx {
    return width_cf.evaluator(-w) * i_lambda4(w, t1, M, spec);
  };
  const double p = 0.5 * shape.d * shape.k;
  phi.tail_bound = [=](double w) { return std::pow(2.0 * w, -p) / p; };
  return phi;
}

}  // namespace detail

/// P(-|g| + w_lambda(h, S_w) - t1 >= 0): the inverted defective component
/// plus the explicit chi-square mass below max(-t1, 0)^2 (where the event is
/// certain). In [0, 1], nonincreasing in t1.
inline double p_lambda_ub(const BlockShape& shape, double lambda, double t1,
                          const QuadratureSpec& spec = {}) {
  shape.validate();
  if (!(lambda >= 0.0))
    throw std::domain_error("p_lambda_ub: lambda must be nonnegative");
  QuadratureSpec inv_spec = spec;
  inv_spec.abs_tol = std::max(spec.abs_tol, 1e-9);
  inv_spec.rel_tol = std::max(spec.rel_tol, 1e-8);
  QuadratureSpec inner_spec = inv_spec;
  inner_spec.max_subdivisions = std::max(spec.max_subdivisions, 8000);
  const double tail =
      reg_lower_gamma(0.5 * shape.M, 0.5 * std::pow(std::max(-t1, 0.0), 2));
  const double mass = 1.0 - tail;
  if (mass <= 0.0) return 1.0;
  const auto phi = detail::ag_cf(shape, lambda, t1, inner_spec);
  const double p_below = gil_pelaez_cdf(phi, 0.0, inv_spec, mass);
  return std::clamp(mass - p_below + tail, 0.0, 1.0);
}

/// Best conditioned bound over the shift and dual variable:
///   P_err <= min_{t1, lambda >= 0} p_lambda_ub(lambda, t1) / P(g >= t1),
/// searched over t1 in [-3 sqrt(M), 3 sqrt(M)], lambda in [0, 3 sqrt(d)].
inline AgBoundResult p_ub_ag(const BlockShape& shape,
                             const QuadratureSpec& spec = {}) {
  shape.validate();
  const double lam_hi = 3.0 * std::sqrt(double(shape.d));
  const double t_hi = 3.0 * std::sqrt(double(shape.M));
  // The characteristic-function inversion resolves the numerator only down
  // to ~1e-9 absolute; past that the subtraction mass - p_below is noise,
  // and dividing by a tiny Gaussian tail would amplify it into an arbitrary
  // (even zero) "bound". Points whose numerator or denominator fall below
  // these floors are uncertifiable and excluded from the search; the
  // restriction only shrinks the feasible set, so the result is still an
  // upper bound. The numerator floor sits two orders above the inversion
  // tolerance so admitted values carry at most ~1% quadrature error.
  constexpr double numer_floor = 1e-7;
  constexpr double denom_floor = 1e-12;
  auto obj = [&](const std::vector<double>& x) -> double {
    try {
      const double denom = gauss_tail(x[1]);
      if (denom < denom_floor) return 1e9;
      const double numer = p_lambda_ub(shape, x[0], x[1], spec);
      if (numer < numer_floor) return 1e9;
      return numer / denom;
    } catch (const numeric_error&) {
      return 1e9;
    }
  };
  const std::vector<double> lo = {0.0, -t_hi};
  const std::vector<double> hi = {lam_hi, t_hi};
  MinNDOptions opts;
  opts.restarts = 2;
  opts.max_iter = 150;
  opts.ftol = 1e-7;
  MinNDResult best;
  for (const auto& s0 : std::vector<std::vector<double>>{
           {0.7 * std::sqrt(0.5 * shape.d), 0.0},
           {1.2 * std::sqrt(0.5 * shape.d), 2.0}}) {
    auto r = minimize_nd(obj, s0, lo, hi, opts);
    if (r.value < best.value) best = r;
  }
  AgBoundResult out;
  out.lambda = best.argmin[0];
  out.t1 = best.argmin[1];
  out.tail_term = reg_lower_gamma(
      0.5 * shape.M, 0.5 * std::pow(std::max(-out.t1, 0.0), 2));
  out.inner_integral =
      p_lambda_ub(shape, out.lambda, out.t1, spec) - out.tail_term;
  out.p_ub_ag = std::clamp(best.value, 0.0, 1.0);
  return out;
}

}  // namespace blockspt
