#pragma once

// Monte Carlo harness: random Gaussian instances, an ADMM solver for the
// block ell_2/ell_1 program, recovery-probability estimation, and direct
// sampling of the width functional and spherical cap measures.
//
// Determinism contract: every randomized routine takes a 64-bit seed and
// derives all randomness from counter-based splitmix64 streams. Trial i of a
// batch uses a stream keyed by (seed, i), so results are bit-identical for a
// fixed seed regardless of thread count or scheduling.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "blockspt/parallel.hpp"
#include "blockspt/special_math.hpp"
#include "blockspt/types.hpp"

namespace blockspt {

// ---------------------------------------------------------------------------
// Random-number generation
// ---------------------------------------------------------------------------

/// Deterministic normal/uniform generator on a splitmix64 stream.
/// Normals come from Box-Muller with the spare cached, so a stream yields
/// the same sequence independent of call-site pairing.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Stream key for trial `index` of a batch seeded by `seed`. Mixes both
  /// words through splitmix64 so nearby (seed, index) pairs decorrelate.
  static std::uint64_t stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    (void)detail::splitmix64(s);
    return detail::splitmix64(s);
  }

  /// Uniform on (0, 1] (never exactly 0, safe inside log()).
  double uniform_pos() {
    const std::uint64_t bits = detail::splitmix64(state_) >> 11;
    return static_cast<double>(bits + 1) * 0x1.0p-53;
  }

  /// Uniform on [0, 1).
  double uniform() { return detail::uniform01(state_); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

/// One random linear system with a planted block-sparse solution.
struct Instance {
  Eigen::MatrixXd A;   ///< M x (d*n), iid standard normal entries.
  Eigen::VectorXd x;   ///< planted solution, supported on the last k blocks.
  Eigen::VectorXd y;   ///< A * x.
  std::uint64_t seed;  ///< stream key the entries were drawn from.
};

/// Draws A with iid N(0,1) entries (filled column-major in one fixed order)
/// and plants x with the last k blocks active, each equal to the first
/// standard basis vector of R^d. By rotational invariance of the Gaussian
/// ensemble, recovery statistics do not depend on this canonical choice.
inline Instance gen_instance(const BlockShape& shape, std::uint64_t seed) {
  shape.validate();
  const int N = shape.ambient_dim();
  Instance inst;
  inst.seed = seed;
  inst.A.resize(shape.M, N);
  Rng rng(seed);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < shape.M; ++i) inst.A(i, j) = rng.normal();
  }
  inst.x = Eigen::VectorXd::Zero(N);
  for (int b = shape.n - shape.k; b < shape.n; ++b) inst.x(b * shape.d) = 1.0;
  inst.y = inst.A * inst.x;
  return inst;
}

// ---------------------------------------------------------------------------
// Block ell_2/ell_1 solver
// ---------------------------------------------------------------------------

struct SolveOptions {
  double tol = 1e-9;      ///< sup-norm tolerance on primal and dual residuals
  int max_iters = 30000;  ///< iteration cap before flagging non-convergence
  /// Early exit: stop as soon as the feasible iterate's objective drops below
  /// this value. Useful when the caller only needs to know whether any
  /// feasible point beats a reference objective, not the minimizer itself.
  double stop_below_objective = -std::numeric_limits<double>::infinity();
};

struct SolveResult {
  Eigen::VectorXd x_hat;  ///< feasible iterate (A x_hat = y to solver accuracy)
  bool converged = false;
  bool objective_stop = false;  ///< stopped early via stop_below_objective
  int iterations = 0;
};

/// Sum of block Euclidean norms, the objective being minimized.
inline double block_l21_norm(const Eigen::VectorXd& x, int d) {
  double total = 0.0;
  for (int b = 0; b * d < x.size(); ++b) {
    total += x.segment(b * d, d).norm();
  }
  return total;
}

/// Solves  min sum_b ||x_b||_2  s.t.  A x = y  by ADMM with unit penalty:
/// alternate the block soft-threshold (prox of the objective) with an exact
/// affine projection onto {A z = y}, whose normal-equation factor A A^T is
/// Cholesky-factored once. The returned iterate is the projected one, so
/// feasibility holds to factorization accuracy even at the iteration cap.
inline SolveResult solve_l2l1(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& y, int d,
                              const SolveOptions& opts = {}) {
  const int N = static_cast<int>(A.cols());
  if (N % d != 0) throw std::invalid_argument("solve_l2l1: cols not divisible by block size");
  if (A.rows() != y.size()) throw std::invalid_argument("solve_l2l1: A rows != y size");

  Eigen::LLT<Eigen::MatrixXd> llt(A * A.transpose());
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("solve_l2l1: Gram matrix factorization failed");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd z_prev = z;

  SolveResult out;
  for (int it = 1; it <= opts.max_iters; ++it) {
    // Block soft-threshold of (z - u) with unit threshold (penalty rho = 1).
    for (int b = 0; b < N / d; ++b) {
      auto seg = z.segment(b * d, d) - u.segment(b * d, d);
      const double nrm = seg.norm();
      x.segment(b * d, d) =
          nrm > 1.0 ? ((1.0 - 1.0 / nrm) * seg).eval() : Eigen::VectorXd::Zero(d);
    }
    // Projection of (x + u) onto the affine constraint set.
    z_prev = z;
    const Eigen::VectorXd w = x + u;
    z = w - A.transpose() * llt.solve(A * w - y);
    u += x - z;

    out.iterations = it;
    if (block_l21_norm(z, d) < opts.stop_below_objective) {
      out.objective_stop = true;
      break;
    }
    if ((x - z).lpNorm<Eigen::Infinity>() < opts.tol &&
        (z - z_prev).lpNorm<Eigen::Infinity>() < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.x_hat = z;
  return out;
}

// ---------------------------------------------------------------------------
// Recovery trials
// ---------------------------------------------------------------------------

struct TrialResult {
  bool success = false;        ///< converged and relative error <= 1e-4
  bool indeterminate = false;  ///< hit the iteration cap with no verdict
  double rel_error = 0.0;
};

/// Generates one instance on stream (seed, index) and attempts recovery.
/// A trial is classified as a failure without waiting for convergence once
/// the solver produces a feasible point whose objective is strictly below
/// the planted solution's: such a point certifies that the planted vector is
/// not the minimizer. This keeps slow near-degenerate failures from being
/// misclassified by the iteration cap.
inline TrialResult recovery_trial(const BlockShape& shape, std::uint64_t seed,
                                  std::uint64_t index = 0,
                                  const SolveOptions& opts = {}) {
  const Instance inst = gen_instance(shape, Rng::stream(seed, index));
  SolveOptions o = opts;
  o.stop_below_objective =
      block_l21_norm(inst.x, shape.d) * (1.0 - 1e-7);
  const SolveResult sol = solve_l2l1(inst.A, inst.y, shape.d, o);
  TrialResult t;
  t.rel_error = (sol.x_hat - inst.x).norm() / inst.x.norm();
  t.indeterminate = !sol.converged && !sol.objective_stop;
  t.success = sol.converged && t.rel_error <= 1e-4;
  return t;
}

/// Estimates the probability that ell_2/ell_1 minimization fails to recover
/// the planted solution. Failures include indeterminate (non-converged)
/// trials, which are additionally reported on their own so they are never
/// silently folded into either outcome.
inline SimReport estimate_perr(const BlockShape& shape, std::int64_t trials,
                               std::uint64_t seed, int threads = 0,
                               const SolveOptions& opts = {}) {
  if (trials <= 0) throw std::invalid_argument("estimate_perr: trials must be positive");
  std::atomic<std::int64_t> failures{0};
  std::atomic<std::int64_t> indeterminate{0};
  parallel_for(
      trials,
      [&](std::int64_t i) {
        const TrialResult t =
            recovery_trial(shape, seed, static_cast<std::uint64_t>(i), opts);
        if (!t.success) failures.fetch_add(1, std::memory_order_relaxed);
        if (t.indeterminate) indeterminate.fetch_add(1, std::memory_order_relaxed);
      },
      threads);
  return make_sim_report(trials, failures.load(), indeterminate.load(), seed);
}

// ---------------------------------------------------------------------------
// Width functional
// ---------------------------------------------------------------------------

/// Closed-form width given the aggregated profile: first n-k entries are the
/// norms of the off-support blocks, the next k are signed first coordinates
/// (negated) of the support blocks, the final k are norms of the orthogonal
/// parts. Minimizes over the scalar shift lambda >= 0:
///   w(h)^2 = min_l  sum_i max(a_i - l, 0)^2 + sum_i (b_i + l)^2 + sum_i c_i^2.
inline double width_min(const WidthProfile& hw, int n, int k) {
  const auto m = static_cast<int>(hw.hw.size());
  if (k < 1 || k > n || m != n + k) {
    throw std::invalid_argument("width_min: profile size must equal n + k with 1 <= k <= n");
  }
  const auto& h = hw.hw;
  double hi = 1.0;
  for (double v : h) hi = std::max(hi, std::abs(v) + 1.0);
  const auto w2 = [&](double lam) {
    double s = 0.0;
    for (int i = 0; i < n - k; ++i) {
      const double t = h[i] - lam;
      if (t > 0.0) s += t * t;
    }
    for (int i = n - k; i < n; ++i) {
      const double t = h[i] + lam;
      s += t * t;
    }
    for (int i = n; i < n + k; ++i) s += h[i] * h[i];
    return s;
  };
  const Min1DResult r = minimize_1d(w2, 0.0, hi, 1e-10);
  return std::sqrt(std::max(r.value, 0.0));
}

/// Samples one aggregated profile for the given shape on stream (seed, index):
/// chi(d) norms for the n-k off-support blocks, a standard normal for each
/// support block's first coordinate, chi(d-1) norms for the orthogonal parts.
inline WidthProfile sample_width_profile(const BlockShape& shape,
                                         std::uint64_t seed,
                                         std::uint64_t index = 0) {
  shape.validate();
  Rng rng(Rng::stream(seed, index));
  WidthProfile hw;
  hw.hw.resize(static_cast<std::size_t>(shape.n + shape.k));
  const auto chi = [&](int dof) {
    double s = 0.0;
    for (int j = 0; j < dof; ++j) {
      const double g = rng.normal();
      s += g * g;
    }
    return std::sqrt(s);
  };
  for (int i = 0; i < shape.n - shape.k; ++i) hw.hw[i] = chi(shape.d);
  for (int i = shape.n - shape.k; i < shape.n; ++i) hw.hw[i] = rng.normal();
  for (int i = shape.n; i < shape.n + shape.k; ++i) hw.hw[i] = chi(shape.d - 1);
  return hw;
}

/// One draw of the width functional w(h) for a standard normal h.
inline double width_eval(const BlockShape& shape, std::uint64_t seed,
                         std::uint64_t index = 0) {
  return width_min(sample_width_profile(shape, seed, index), shape.n, shape.k);
}

// ---------------------------------------------------------------------------
// Spherical cap measure of the descent cone
// ---------------------------------------------------------------------------

/// Squared width-to-norm ratio  min_l w_l(h)^2 / ||h||^2  for one profile.
/// The ratio does not depend on the cap angle, so a single sample serves
/// every angle of a sweep.
inline double width_ratio_sample(const BlockShape& shape, std::uint64_t seed,
                                 std::uint64_t index) {
  const WidthProfile hw = sample_width_profile(shape, seed, index);
  const double w = width_min(hw, shape.n, shape.k);
  double h2 = 0.0;
  for (double v : hw.hw) h2 += v * v;
  if (h2 <= 0.0) return 0.0;
  return w * w / h2;
}

/// Estimates P( w(h) >= cos(eps) * ||h|| ) over a grid of angles by reusing
/// one set of ratio samples, so estimates across the grid are comparable and
/// monotone in eps by construction.
inline CapGrid cap_measure_curve(const BlockShape& shape,
                                 const std::vector<double>& eps_values,
                                 std::int64_t trials, std::uint64_t seed,
                                 int threads = 0,
                                 std::vector<SimReport>* reports = nullptr) {
  shape.validate();
  if (trials <= 0) throw std::invalid_argument("cap_measure_curve: trials must be positive");
  for (double e : eps_values) {
    if (!(e > 0.0) || !(e <= 1.5707963267948966)) {
      throw std::invalid_argument("cap_measure_curve: eps must lie in (0, pi/2]");
    }
  }
  std::vector<double> ratios(static_cast<std::size_t>(trials));
  parallel_for(
      trials,
      [&](std::int64_t i) {
        ratios[static_cast<std::size_t>(i)] =
            width_ratio_sample(shape, seed, static_cast<std::uint64_t>(i));
      },
      threads);

  CapGrid grid;
  grid.eps_values = eps_values;
  grid.source = CapSource::simulated;
  grid.sigma_ratios.reserve(eps_values.size());
  if (reports) reports->clear();
  for (double e : eps_values) {
    const double c2 = std::cos(e) * std::cos(e);
    std::int64_t hits = 0;
    for (double r : ratios) {
      if (r >= c2) ++hits;
    }
    SimReport rep = make_sim_report(trials, hits, 0, seed);
    grid.sigma_ratios.push_back(rep.p_hat);
    if (reports) reports->push_back(rep);
  }
  return grid;
}

/// Single-angle convenience wrapper around cap_measure_curve.
inline SimReport cap_measure_sim(const BlockShape& shape, double eps,
                                 std::int64_t trials, std::uint64_t seed,
                                 int threads = 0) {
  std::vector<SimReport> reports;
  cap_measure_curve(shape, {eps}, trials, seed, threads, &reports);
  return reports.front();
}

}  // namespace blockspt
