#pragma once

// Shared domain types: problem dimensions, optimizer parameter bundles,
// bound/report records, and the intrinsic-volume vector with its feasibility
// constraints.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockspt {

/// Problem dimensions for block-sparse recovery: n blocks of length d
/// (ambient dimension d*n), k nonzero blocks, M linear measurements.
struct BlockShape {
  int d = 2;
  int k = 1;
  int n = 2;
  int M = 2;

  int ambient_dim() const { return d * n; }
  int sparse_dim() const { return d * k; }
  double alpha() const { return static_cast<double>(M) / ambient_dim(); }
  double beta() const { return static_cast<double>(k) / n; }

  void validate() const {
    if (d < 2) throw std::invalid_argument("BlockShape: d must be >= 2");
    if (k < 1) throw std::invalid_argument("BlockShape: k must be >= 1");
    if (k > n) throw std::invalid_argument("BlockShape: k must be <= n");
    if (M < d * k || M > d * n)
      throw std::invalid_argument("BlockShape: M must lie in [d*k, d*n]");
  }
};

/// The exponential-tilt parameters searched over by the Chernoff-style
/// bounds: c3s and gammas are the scaled tilt/decoupling pair, lambda the
/// dual variable of the width minimization, t1 the norm-shift used by the
/// lower-tail and finite-dimensional bounds.
struct ChernoffParams {
  double c3s = 0.0;
  double gammas = 0.0;
  double lambda = 0.0;
  double t1 = 0.0;
};

enum class TailDirection { upper_tail, lower_tail };

/// A computed rate-function bound (exponent <= 0) together with the
/// parameters that achieved it.
struct RateBound {
  TailDirection direction = TailDirection::upper_tail;
  double exponent = 0.0;
  ChernoffParams params;
  double alpha = 0.0;
  double beta = 0.0;
  int d = 0;
};

/// Aggregated magnitude profile of a Gaussian instance used by the width
/// formula: entries 0..n-k-1 are chi(d) magnitudes of the zero blocks, the
/// next k are signed standard normals (component along each planted
/// direction), the last k are chi(d-1) magnitudes orthogonal to it.
struct WidthProfile {
  std::vector<double> hw;
};

enum class CapSource { analytic_bound, simulated };

/// Relative measures of the epsilon-extended cap of the descent cone,
/// sampled on an increasing grid of angles.
struct CapGrid {
  std::vector<double> eps_values;
  std::vector<double> sigma_ratios;
  CapSource source = CapSource::analytic_bound;

  void validate() const {
    if (eps_values.size() != sigma_ratios.size())
      throw std::invalid_argument("CapGrid: grid size mismatch");
    for (std::size_t i = 0; i < eps_values.size(); ++i) {
      if (sigma_ratios[i] < -1e-12 || sigma_ratios[i] > 1.0 + 1e-12)
        throw std::invalid_argument("CapGrid: ratios must lie in [0, 1]");
      if (i > 0 && eps_values[i] <= eps_values[i - 1])
        throw std::invalid_argument("CapGrid: eps grid must be increasing");
    }
  }
};

/// Normalized spherical intrinsic volumes v_0..v_{dn-1} of the solution
/// cone; the last entry is computed independently of the regression and the
/// remaining mass satisfies the normalization and alternating-sum identities.
struct IntrinsicVolumeVector {
  std::vector<double> v;   // size dn, indices 0..dn-1
  double v_last_fixed = 0.0;

  /// Max violation of {v >= 0, sum_{0..dn-2} v = 1 - v_last, alternating
  /// sum = 0}; feasible vectors return <= tol.
  double constraint_residual() const {
    if (v.empty()) return 0.0;
    double sum = 0.0, alt = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i + 1 < v.size()) sum += v[i];
      alt += ((i % 2 == 0) ? 1.0 : -1.0) * v[i];
      neg = std::max(neg, -v[i]);
    }
    const double r1 = std::abs(sum - (1.0 - v_last_fixed));
    const double r2 = std::abs(alt);
    return std::max({r1, r2, neg});
  }
};

/// Monte Carlo outcome summary with a 95% Wilson confidence interval.
/// `indeterminate` counts trials whose solver did not converge; they are
/// included in `failures` (conservative) and reported separately.
struct SimReport {
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  std::int64_t indeterminate = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t seed = 0;
};

/// Wilson 95% score interval for a binomial proportion.
inline SimReport make_sim_report(std::int64_t trials, std::int64_t failures,
                                 std::int64_t indeterminate,
                                 std::uint64_t seed) {
  SimReport r;
  r.trials = trials;
  r.failures = failures;
  r.indeterminate = indeterminate;
  r.seed = seed;
  const double nt = static_cast<double>(trials);
  const double p = (trials > 0) ? static_cast<double>(failures) / nt : 0.0;
  r.p_hat = p;
  if (trials > 0) {
    const double z = 1.959963984540054;  // 97.5% normal quantile
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nt;
    const double center = (p + z2 / (2.0 * nt)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)) / denom;
    r.ci_low = std::max(0.0, center - half);
    r.ci_high = std::min(1.0, center + half);
  }
  return r;
}

/// Result of the finite-dimensional probabilistic upper bound on the error
/// probability: the optimized value with its achieving shift/dual pair and
/// the two additive pieces (frequency-integral component and explicit
/// chi-square tail mass).
struct AgBoundResult {
  double p_ub_ag = 1.0;
  double t1 = 0.0;
  double lambda = 0.0;
  double inner_integral = 0.0;
  double tail_term = 0.0;
};

}  // namespace blockspt
