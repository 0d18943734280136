#pragma once

// End-to-end error-probability curves for a fixed (d, k, n): estimate the
// spherical cap measures of the descent cone (analytically or by sampling),
// fix the top intrinsic volume, regress the remaining intrinsic volumes
// against the Steiner system, and evaluate the Crofton sum over a range of
// measurement counts M.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "blockspt/integral_geometry.hpp"
#include "blockspt/monte_carlo.hpp"
#include "blockspt/types.hpp"

namespace blockspt {

struct PipelineOptions {
  std::int64_t sim_trials = 200000;  ///< samples for the simulated cap curve
  std::uint64_t seed = 1;
  int threads = 0;
  QuadratureSpec quad{};
  RegressionOptions regression{};
};

struct PerrCurve {
  std::vector<int> m_values;
  std::vector<double> p_raw;       ///< Crofton sums on the regressed volumes
  std::vector<double> p_monotone;  ///< nonincreasing least-squares projection
  double max_raw_violation = 0.0;  ///< largest upward step in the raw curve
  bool violation_flagged = false;  ///< raw violation exceeded 0.02
  double v_last_value = 0.0;       ///< fixed top volume fed to the regression
  RegressionResult regression;
  CapGrid sigma;
};

/// L2 projection onto nonincreasing sequences (pool adjacent violators).
inline std::vector<double> isotonic_nonincreasing(const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n == 0) return {};
  // Run PAVA for a nondecreasing fit on the negated values, then negate back.
  std::vector<double> level;
  std::vector<double> weight;
  std::vector<std::size_t> len;
  level.reserve(n);
  weight.reserve(n);
  len.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    level.push_back(-y[i]);
    weight.push_back(1.0);
    len.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w = weight[weight.size() - 2] + weight.back();
      const double v = (weight[weight.size() - 2] * level[level.size() - 2] +
                        weight.back() * level.back()) /
                       w;
      const std::size_t l = len[len.size() - 2] + len.back();
      level.pop_back();
      weight.pop_back();
      len.pop_back();
      level.back() = v;
      weight.back() = w;
      len.back() = l;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t b = 0; b < level.size(); ++b) {
    for (std::size_t r = 0; r < len[b]; ++r) out.push_back(-level[b]);
  }
  return out;
}

/// Builds the full curve M -> P_err for M in [m_lo, m_hi]. `source` selects
/// how the cap measures are obtained: analytic Chernoff-type bounds give the
/// upper-tracking curve, direct sampling gives the tight numerical curve.
/// The top volume is always fixed from its exact integral representation.
inline PerrCurve perr_pipeline(const BlockShape& shape,
                               const std::vector<double>& eps_grid,
                               CapSource source, int m_lo, int m_hi,
                               const PipelineOptions& opts = {}) {
  shape.validate();
  const int dn = shape.ambient_dim();
  if (m_lo < 0 || m_hi > dn || m_lo > m_hi) {
    throw std::invalid_argument("perr_pipeline: M range must satisfy 0 <= lo <= hi <= d*n");
  }

  PerrCurve curve;

  // Cap measures sigma(eps) on the grid.
  if (source == CapSource::simulated) {
    curve.sigma = cap_measure_curve(shape, eps_grid, opts.sim_trials, opts.seed,
                                    opts.threads);
  } else {
    curve.sigma.eps_values = eps_grid;
    curve.sigma.source = CapSource::analytic_bound;
    curve.sigma.sigma_ratios.resize(eps_grid.size());
    std::vector<double>& vals = curve.sigma.sigma_ratios;
    parallel_for(
        static_cast<std::int64_t>(eps_grid.size()),
        [&](std::int64_t i) {
          vals[static_cast<std::size_t>(i)] =
              cap_bound(shape, eps_grid[static_cast<std::size_t>(i)], opts.quad)
                  .bound;
        },
        opts.threads);
  }

  // The integral representation yields the measure of the complementary
  // event; the regression fixes the cone's own top volume.
  const double printed = v_last(shape, opts.quad);
  curve.v_last_value = std::clamp(1.0 - printed, 0.0, 1.0);

  const Eigen::MatrixXd G = build_steiner_system(shape, eps_grid);
  curve.regression =
      regress_volumes(curve.sigma, G, curve.v_last_value, opts.regression);

  curve.m_values.reserve(static_cast<std::size_t>(m_hi - m_lo + 1));
  curve.p_raw.reserve(static_cast<std::size_t>(m_hi - m_lo + 1));
  for (int m = m_lo; m <= m_hi; ++m) {
    curve.m_values.push_back(m);
    curve.p_raw.push_back(crofton_perr(curve.regression.volumes, m));
  }
  for (std::size_t i = 0; i + 1 < curve.p_raw.size(); ++i) {
    curve.max_raw_violation =
        std::max(curve.max_raw_violation, curve.p_raw[i + 1] - curve.p_raw[i]);
  }
  curve.violation_flagged = curve.max_raw_violation > 0.02;
  curve.p_monotone = isotonic_nonincreasing(curve.p_raw);
  for (double& p : curve.p_monotone) p = std::clamp(p, 0.0, 1.0);
  return curve;
}

}  // namespace blockspt
