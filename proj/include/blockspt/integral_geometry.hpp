#pragma once

// Spherical integral geometry for the block-sparse failure cone: Steiner
// cap-extension coefficients, cap-measure bounds through characteristic
// functions, the top intrinsic volume, constrained regression recovering the
// full intrinsic-volume vector from cap measures, and the Crofton expression
// turning intrinsic volumes into an error probability.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "blockspt/special_math.hpp"
#include "blockspt/types.hpp"

namespace blockspt {

/// Surface measure of the unit sphere S^{n-1} in R^n: 2 pi^{n/2} / Gamma(n/2).
inline double sphere_surface(int n) {
  if (n < 1) throw std::domain_error("sphere_surface: requires n >= 1");
  return 2.0 * std::exp(0.5 * n * std::log(detail::kPi) -
                        detail::lgamma_pos(0.5 * n));
}

/// Raw Steiner coefficient of the spherical cap-extension formula:
///   g(n, i, eps) = sigma_i(S^i) sigma_{n-i-2}(S^{n-i-2})
///                  int_0^eps cos^i(phi) sin^{n-i-2}(phi) dphi.
inline double steiner_coeff(int n_st, int i_st, double eps,
                            const QuadratureSpec& spec = {}) {
  if (i_st < 0 || i_st > n_st - 2)
    throw std::domain_error("steiner_coeff: requires 0 <= i <= n-2");
  if (!(eps > 0.0) || !(eps < 0.5 * detail::kPi))
    throw std::domain_error("steiner_coeff: requires eps in (0, pi/2)");
  auto f = [&](double phi) {
    return std::pow(std::cos(phi), i_st) *
           std::pow(std::sin(phi), n_st - i_st - 2);
  };
  auto r = integrate<double>(f, 0.0, eps, spec);
  if (!r.converged) throw numeric_error("steiner_coeff: quadrature failed");
  return sphere_surface(i_st + 1) * sphere_surface(n_st - i_st - 1) * r.value;
}

/// Steiner coefficients normalized by the full sphere measure. The phi
/// integral collapses to a regularized incomplete beta under t = sin^2(phi),
/// which is how large-dimension rows stay exact:
///   g(n, i, eps) / sigma_{n-1}(S^{n-1}) = I_{sin^2 eps}((n-i-1)/2, (i+1)/2).
inline double steiner_coeff_normalized(int n_st, int i_st, double eps) {
  if (i_st < 0 || i_st > n_st - 2)
    throw std::domain_error("steiner_coeff_normalized: requires 0 <= i <= n-2");
  const double x = std::sin(eps) * std::sin(eps);
  return reg_inc_beta(0.5 * (n_st - i_st - 1), 0.5 * (i_st + 1), x);
}

/// Rows indexed by the eps grid, columns by the intrinsic-volume index
/// i = 0..dn-2; entry (r, i) is the normalized Steiner coefficient.
inline Eigen::MatrixXd build_steiner_system(const BlockShape& shape,
                                            const std::vector<double>& eps_grid) {
  shape.validate();
  const int dim = shape.ambient_dim();
  for (std::size_t r = 0; r + 1 < eps_grid.size(); ++r)
    if (!(eps_grid[r] < eps_grid[r + 1]))
      throw std::domain_error("build_steiner_system: grid must increase");
  for (double e : eps_grid)
    if (!(e > 0.0) || !(e < 0.5 * detail::kPi))
      throw std::domain_error("build_steiner_system: eps outside (0, pi/2)");
  Eigen::MatrixXd G(eps_grid.size(), dim - 1);
  for (std::size_t r = 0; r < eps_grid.size(); ++r)
    for (int i = 0; i < dim - 1; ++i)
      G(r, i) = steiner_coeff_normalized(dim, i, eps_grid[r]);
  return G;
}

// ---------------------------------------------------------------------------
// Cap-measure bound (frequency-domain)
// ---------------------------------------------------------------------------

namespace detail {

/// Characteristic function of -(w_lambda(h)^2 - cos^2(eps) |h|^2), whose CDF
/// at 0 is P(w_lambda^2 >= cos^2(eps) |h|^2):
///   I1 = (E_{chi2(d)} e^{-jw (max(sqrt(h)-lambda,0)^2 - c h)})^{n-k}
///   I2 = (e^{-jw lambda^2 - 2 lambda^2 w^2 / D} / sqrt(D))^k
///   I3 = D^{-(d-1)k/2},   D = 1 - 2jw(c - 1),  c = cos^2(eps).
/// Re D = 1 throughout, so principal-branch powers stay continuous in w.
inline CharacteristicFunction cap_cf(int d, int k, int n, double lambda,
                                     double cos2, const QuadratureSpec& spec) {
  CharacteristicFunction phi;
  phi.evaluator = [=](double w) -> cplx {
    const cplx j(0.0, 1.0);
    const cplx one_coord = expectation_integral(
        Density::chi_square, d,
        [&](double h) -> cplx {
          const double m = std::max(std::sqrt(h) - lambda, 0.0);
          return std::exp(-j * w * (m * m - cos2 * h));
        },
        spec);
    const cplx D = 1.0 - 2.0 * j * w * (cos2 - 1.0);
    const cplx i2_coord =
        std::exp(-j * w * lambda * lambda - 2.0 * lambda * lambda * w * w / D) /
        std::sqrt(D);
    const cplx i3 = std::pow(D, -0.5 * (d - 1) * k);
    return ipow(one_coord, n - k) * ipow(i2_coord, k) * i3;
  };
  // |I2^k I3| <= (1 + 4 w^2 (1-c)^2)^{-dk/4} and |I1| <= 1, so the remaining
  // inversion mass past W is bounded by the closed-form power-law tail.
  const double s = 1.0 - cos2;
  const double p = 0.5 * d * k;
  phi.tail_bound = [=](double w) {
    return std::pow(2.0 * s * w, -p) / p;
  };
  return phi;
}

}  // namespace detail

/// Upper bound on the normalized cap-extension measure together with the
/// dual value achieving it.
struct CapBoundResult {
  double bound = 1.0;
  double lambda = 0.0;
};

/// Chernoff-type cap-measure bound: the extension measure of the failure cone
/// by angle eps, relative to the whole sphere, is at most
///   min_lambda P(w_lambda(h)^2 >= cos^2(eps) |h|^2),
/// each probability evaluated by characteristic-function inversion. The
/// search interval [0, 3 sqrt(d)] widens automatically if the optimum lands
/// on its upper edge.
inline CapBoundResult cap_bound(const BlockShape& shape, double eps,
                                const QuadratureSpec& spec = {}) {
  shape.validate();
  if (!(eps > 0.0) || !(eps < 0.5 * detail::kPi))
    throw std::domain_error("cap_bound: requires eps in (0, pi/2)");
  const double cos2 = std::cos(eps) * std::cos(eps);
  // The inversion integrand decays like w^{-dk/2}; a 1e-9 tail is far below
  // the bound tolerances and keeps the oscillatory inner integrals shallow.
  QuadratureSpec inv_spec = spec;
  inv_spec.abs_tol = std::max(spec.abs_tol, 1e-9);
  inv_spec.rel_tol = std::max(spec.rel_tol, 1e-8);
  QuadratureSpec inner_spec = inv_spec;
  inner_spec.max_subdivisions = std::max(spec.max_subdivisions, 8000);
  auto bound_at = [&](double lam) {
    const auto phi =
        detail::cap_cf(shape.d, shape.k, shape.n, lam, cos2, inner_spec);
    return gil_pelaez_cdf(phi, 0.0, inv_spec);
  };
  double lo = 0.0, hi = 3.0 * std::sqrt(double(shape.d));
  Min1DResult best;
  for (int widen = 0; widen < 4; ++widen) {
    best = minimize_1d(bound_at, lo, hi, 1e-4);
    if (best.argmin < hi - 1e-3) break;
    hi *= 1.5;
  }
  return {std::clamp(best.value, 0.0, 1.0), best.argmin};
}

/// Top intrinsic volume of the failure cone, v_{dn-1}: the probability that
/// the signed coordinate aggregate Sum_{i<=n-k} |H_i| + Sum_{support} g_i is
/// nonnegative, via inversion of (E e^{jw chi(d)})^{n-k} e^{-k w^2 / 2}.
/// The k = 0 overload covers the vacuous-constraint limit (whole sphere).
inline double v_last(int d, int k, int n, const QuadratureSpec& spec = {}) {
  if (d < 2 || k < 0 || n < 1 || k > n)
    throw std::domain_error("v_last: invalid dimensions");
  CharacteristicFunction phi;
  phi.evaluator = [=](double w) -> cplx {
    const cplx j(0.0, 1.0);
    const cplx chi_cf = expectation_integral(
        Density::chi_square, d,
        [&](double h) -> cplx { return std::exp(j * w * std::sqrt(h)); },
        spec);
    return ipow(chi_cf, n - k) * std::exp(-0.5 * k * w * w);
  };
  return 1.0 - gil_pelaez_cdf(phi, 0.0, spec);
}

inline double v_last(const BlockShape& shape, const QuadratureSpec& spec = {}) {
  shape.validate();
  return v_last(shape.d, shape.k, shape.n, spec);
}

// ---------------------------------------------------------------------------
// Constrained ridge regression for the intrinsic-volume vector
// ---------------------------------------------------------------------------

/// Regression knobs: ridge weight and the exponents of the data/penalty norms
/// (only the squared form p = q = 2 is implemented; the fields document the
/// family), plus the splitting iteration's parameters.
///
/// The default ridge weight is calibrated for the squared objective: a weight
/// w in the unsquared form |sigma - G v| + w |v| acts like
/// w * |residual| / |v| here, which is ~0.05 at the residual and volume
/// scales of the (d=2, k=6, n=18) reference problem. Weights near 1 in the
/// squared form visibly over-flatten the recovered volume profile (the
/// Crofton curve then misses the simulated error probability by ~0.04 on the
/// transition shoulder; at 0.05 the mismatch stays under 0.02).
struct RegressionOptions {
  double lambda_reg = 0.05;
  int p_reg = 2;
  int q_reg = 2;
  double rho = 5.0;        // splitting penalty
  int max_iters = 600000;  // hard iteration cap
  double tol = 1e-9;       // primal residual target (inf-norm)
};

struct RegressionResult {
  IntrinsicVolumeVector volumes;
  bool euler_dropped = false;  // set when the fixed v_last makes it infeasible
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double stationarity_residual = 0.0;
};

/// Recovers the intrinsic-volume vector v (indices 0..dn-2; the top entry is
/// fixed to v_last_val) from cap measures sigma on the grid behind G:
///   minimize |sigma - G v|^2 + lambda_reg |v|^2
///   subject to v >= 0, G v <= sigma,
///              sum v_i = 1 - v_last_val,
///              sum (-1)^i v_i = -(-1)^{dn-1} v_last_val,
/// by an operator-splitting iteration on the boxed form C v in [l, u] with a
/// cached factorization. The equality pair is infeasible together with
/// nonnegativity whenever v_last_val > 1/2 (the alternating sum would need a
/// negative parity block); in that case the alternating-sum constraint is
/// dropped and reported.
inline RegressionResult regress_volumes(const CapGrid& sigma,
                                        const Eigen::MatrixXd& G,
                                        double v_last_val,
                                        const RegressionOptions& opts = {}) {
  if (opts.p_reg != 2 || opts.q_reg != 2)
    throw std::invalid_argument("regress_volumes: only p = q = 2 supported");
  const int rows = static_cast<int>(G.rows());
  const int m = static_cast<int>(G.cols());
  if (static_cast<int>(sigma.sigma_ratios.size()) != rows)
    throw std::invalid_argument("regress_volumes: sigma/G size mismatch");
  if (!(v_last_val >= 0.0) || !(v_last_val <= 1.0))
    throw std::domain_error("regress_volumes: v_last_val must lie in [0, 1]");
  const int dim = m + 1;

  RegressionResult out;
  out.euler_dropped = v_last_val > 0.5 + 1e-12;
  const int n_eq = out.euler_dropped ? 1 : 2;
  const int cr = m + rows + n_eq;

  Eigen::VectorXd sig(rows);
  for (int r = 0; r < rows; ++r) sig(r) = sigma.sigma_ratios[r];

  Eigen::MatrixXd C(cr, m);
  C.topRows(m) = Eigen::MatrixXd::Identity(m, m);
  C.middleRows(m, rows) = G;
  C.row(m + rows).setOnes();
  if (!out.euler_dropped)
    for (int i = 0; i < m; ++i) C(m + rows + 1, i) = (i % 2 == 0) ? 1.0 : -1.0;

  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd l = Eigen::VectorXd::Constant(cr, -inf);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(cr, inf);
  l.head(m).setZero();
  u.segment(m, rows) = sig;
  const double c1 = 1.0 - v_last_val;
  l(m + rows) = c1;
  u(m + rows) = c1;
  if (!out.euler_dropped) {
    const double c2 = -std::pow(-1.0, dim - 1) * v_last_val;
    l(m + rows + 1) = c2;
    u(m + rows + 1) = c2;
  }

  const Eigen::MatrixXd P =
      2.0 * (G.transpose() * G +
             opts.lambda_reg * Eigen::MatrixXd::Identity(m, m));
  const Eigen::VectorXd q = -2.0 * G.transpose() * sig;
  const Eigen::LLT<Eigen::MatrixXd> K(
      P + opts.rho * C.transpose() * C);
  if (K.info() != Eigen::Success)
    throw numeric_error("regress_volumes: factorization failed");

  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(cr);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(cr);
  Eigen::VectorXd Cv(cr);
  double rp = inf;
  int it = 0;
  while (it < opts.max_iters) {
    v = K.solve(-q + C.transpose() * (opts.rho * z - y));
    Cv.noalias() = C * v;
    z = (Cv + y / opts.rho).cwiseMax(l).cwiseMin(u);
    y += opts.rho * (Cv - z);
    ++it;
    if (it % 1000 == 0) {
      rp = (Cv - z).lpNorm<Eigen::Infinity>();
      if (rp < opts.tol) break;
    }
  }
  rp = (Cv - z).lpNorm<Eigen::Infinity>();
  out.iterations = it;
  out.primal_residual = rp;
  out.stationarity_residual =
      (P * v + q + C.transpose() * y).lpNorm<Eigen::Infinity>();
  out.converged = rp < 10.0 * opts.tol;

  out.volumes.v.assign(dim, 0.0);
  for (int i = 0; i < m; ++i) out.volumes.v[i] = std::max(v(i), 0.0);
  out.volumes.v[dim - 1] = v_last_val;
  out.volumes.v_last_fixed = v_last_val;
  return out;
}

// ---------------------------------------------------------------------------
// Crofton formula
// ---------------------------------------------------------------------------

/// Unclipped Crofton sum: twice the intrinsic-volume mass at indices of the
/// same parity as M, from M upward. Linear in v.
inline double crofton_perr_raw(const IntrinsicVolumeVector& vol, int M) {
  const int dim = static_cast<int>(vol.v.size());
  if (M < 0 || M > dim)
    throw std::domain_error("crofton_perr: requires 0 <= M <= dn");
  double s = 0.0;
  for (int i = M; i <= dim - 1; i += 2) s += vol.v[i];
  return 2.0 * s;
}

/// Probability that an M-measurement Gaussian system fails to pin down the
/// block-sparse solution, from the intrinsic volumes of the failure cone.
/// M = 0 is constraint-forced to 1 (normalization plus the alternating-sum
/// identity make the parity mass exactly 1/2) and M = dn is an empty sum.
inline double crofton_perr(const IntrinsicVolumeVector& vol, int M) {
  const int dim = static_cast<int>(vol.v.size());
  if (M < 0 || M > dim)
    throw std::domain_error("crofton_perr: requires 0 <= M <= dn");
  if (M == 0) return 1.0;
  if (M == dim) return 0.0;
  return std::clamp(crofton_perr_raw(vol, M), 0.0, 1.0);
}

}  // namespace blockspt
