#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "blockspt/integral_geometry.hpp"
#include "blockspt/monte_carlo.hpp"

using namespace blockspt;

namespace {
constexpr double kPi = 3.14159265358979324;

double binom(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0));
}
}  // namespace

TEST_CASE("sphere surface areas match the classical values") {
  CHECK(sphere_surface(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sphere_surface(2) == doctest::Approx(2.0 * kPi).epsilon(1e-12));
  CHECK(sphere_surface(3) == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  CHECK(sphere_surface(4) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-12));
  CHECK_THROWS_AS(sphere_surface(0), std::domain_error);
}

TEST_CASE("Steiner coefficients match closed forms and normalization") {
  // n=2, i=0: 2 * 2 * eps.
  CHECK(steiner_coeff(2, 0, 0.6) == doctest::Approx(4.0 * 0.6).epsilon(1e-11));
  // n=3, i=0: 2 * 2 pi * (1 - cos eps).
  CHECK(steiner_coeff(3, 0, 1.0) ==
        doctest::Approx(4.0 * kPi * (1.0 - std::cos(1.0))).epsilon(1e-11));
  // n=4, i=1: (2 pi)^2 * sin^2(eps) / 2.
  const double s07 = std::sin(0.7);
  CHECK(steiner_coeff(4, 1, 0.7) ==
        doctest::Approx(2.0 * kPi * kPi * s07 * s07).epsilon(1e-11));

  for (int n : {3, 5, 8, 36}) {
    for (int i : {0, 1, n - 2}) {
      for (double eps : {0.3, 0.9, 1.4}) {
        CHECK(steiner_coeff(n, i, eps) / sphere_surface(n) ==
              doctest::Approx(steiner_coeff_normalized(n, i, eps))
                  .epsilon(1e-8));
      }
    }
  }
  // Coefficients grow with the cap angle.
  double prev = 0.0;
  for (double eps = 0.2; eps < 1.5; eps += 0.2) {
    const double g = steiner_coeff_normalized(6, 2, eps);
    CHECK(g > prev);
    prev = g;
  }
  CHECK_THROWS_AS(steiner_coeff(4, 3, 0.5), std::domain_error);
  CHECK_THROWS_AS(steiner_coeff(4, -1, 0.5), std::domain_error);
  CHECK_THROWS_AS(steiner_coeff(4, 1, 0.0), std::domain_error);
  CHECK_THROWS_AS(steiner_coeff(4, 1, 1.5707963267948966), std::domain_error);
}

TEST_CASE("Steiner system has one column per volume index") {
  BlockShape shape;
  shape.d = 2;
  shape.k = 2;
  shape.n = 4;
  shape.M = 6;
  const std::vector<double> grid{0.3, 0.5, 0.7, 0.9};
  const Eigen::MatrixXd G = build_steiner_system(shape, grid);
  REQUIRE(G.rows() == 4);
  REQUIRE(G.cols() == 7);  // dim - 1 columns for dim = 8
  for (int r = 0; r < G.rows(); ++r)
    for (int c = 0; c < G.cols(); ++c)
      CHECK(G(r, c) == doctest::Approx(steiner_coeff_normalized(
                           8, c, grid[r])).epsilon(1e-14));
  CHECK_THROWS_AS(build_steiner_system(shape, {0.5, 0.4}), std::domain_error);
  CHECK_THROWS_AS(build_steiner_system(shape, {0.0, 0.4}), std::domain_error);
}

TEST_CASE("cap-measure bound reproduces reference values") {
  QuadratureSpec spec;
  BlockShape s2;
  s2.d = 2;
  s2.k = 6;
  s2.n = 18;
  s2.M = 36;
  const CapBoundResult b2 = cap_bound(s2, 0.5, spec);
  CHECK(std::abs(b2.bound - 0.144745) < 1e-3);  // value this build produces
  CHECK(std::abs(b2.bound - 0.1465) < 5e-3);    // tabulated reference
  CHECK(b2.lambda > 0.0);

  BlockShape s10;
  s10.d = 10;
  s10.k = 6;
  s10.n = 18;
  s10.M = 180;
  const CapBoundResult b10 = cap_bound(s10, 0.7, spec);
  CHECK(std::abs(b10.bound - 0.437051) < 1.5e-3);
  CHECK(std::abs(b10.bound - 0.4391) < 5e-3);

  CHECK_THROWS_AS(cap_bound(s2, 0.0, spec), std::domain_error);
  CHECK_THROWS_AS(cap_bound(s2, 1.5707963267948966, spec), std::domain_error);
}

TEST_CASE("cap-measure bound is monotone and dominates simulation") {
  QuadratureSpec spec;
  BlockShape shape;
  shape.d = 2;
  shape.k = 6;
  shape.n = 18;
  shape.M = 36;
  double prev = 0.0;
  for (double eps : {0.5, 0.6, 0.7, 0.8, 0.9}) {
    const double b = cap_bound(shape, eps, spec).bound;
    CHECK(b > prev);
    CHECK(b <= 1.0 + 1e-12);
    prev = b;
  }
  // Upper-bound validity against a quick direct estimate of the extension
  // measure (three CI half-widths of slack keeps this deterministic-robust).
  for (double eps : {0.5, 0.7}) {
    const SimReport rep = cap_measure_sim(shape, eps, 20000, 7);
    const double half = 0.5 * (rep.ci_high - rep.ci_low);
    CHECK(cap_bound(shape, eps, spec).bound >= rep.p_hat - 3.0 * half);
  }
}

TEST_CASE("top intrinsic volume: closed-form limits and quadrature oracle") {
  QuadratureSpec spec;
  // No active blocks: the cone is the whole space, the measure is full.
  CHECK(v_last(2, 0, 5, spec) == doctest::Approx(1.0).epsilon(1e-9));
  // All blocks active: a symmetric Gaussian score, measure exactly 1/2.
  CHECK(v_last(2, 3, 3, spec) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(v_last(4, 2, 2, spec) == doctest::Approx(0.5).epsilon(1e-7));

  // One off-support block: P(chi_d + sqrt(k) g > 0) = E Phi(chi_d / sqrt(k))
  // has a one-dimensional quadrature form to compare against.
  const auto direct = integrate<double>(
      [](double h) {
        return (1.0 - gauss_tail(std::sqrt(0.5 * h))) * chi2_pdf(h, 2.0);
      },
      0.0, 60.0, spec);
  CHECK(v_last(2, 2, 3, spec) == doctest::Approx(direct.value).epsilon(1e-7));
  CHECK(v_last(2, 2, 3, spec) == doctest::Approx(0.788675).epsilon(1e-4));

  BlockShape shape;
  shape.d = 2;
  shape.k = 6;
  shape.n = 18;
  shape.M = 20;
  CHECK(v_last(shape, spec) == doctest::Approx(v_last(2, 6, 18, spec)));
  CHECK(v_last(2, 6, 18, spec) > 0.9999);
  CHECK(v_last(2, 6, 18, spec) <= 1.0);

  CHECK_THROWS_AS(v_last(1, 1, 3, spec), std::domain_error);
  CHECK_THROWS_AS(v_last(2, 4, 3, spec), std::domain_error);
  CHECK_THROWS_AS(v_last(2, -1, 3, spec), std::domain_error);
}

TEST_CASE("volume regression recovers a consistent synthetic profile") {
  // Truth: the binomial profile v_i = C(7, i) / 128 on dim = 8, which
  // satisfies both linear constraints exactly (sums to 1, alternating sum 0).
  BlockShape shape;
  shape.d = 2;
  shape.k = 2;
  shape.n = 4;
  shape.M = 6;
  const int dim = 8;
  std::vector<double> truth(dim);
  for (int i = 0; i < dim; ++i) truth[i] = binom(7, i) / 128.0;

  std::vector<double> grid;
  for (double e = 0.2; e <= 1.4 + 1e-9; e += 0.05) grid.push_back(e);
  const Eigen::MatrixXd G = build_steiner_system(shape, grid);

  CapGrid sigma;
  sigma.eps_values = grid;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    double acc = 0.0;
    for (int i = 0; i < dim - 1; ++i) acc += G(r, i) * truth[i];
    sigma.sigma_ratios.push_back(acc);
  }

  RegressionOptions opts;
  opts.tol = 1e-10;
  opts.lambda_reg = 1e-8;
  const RegressionResult res =
      regress_volumes(sigma, G, truth[dim - 1], opts);
  CHECK(res.converged);
  CHECK_FALSE(res.euler_dropped);
  REQUIRE(res.volumes.v.size() == static_cast<std::size_t>(dim));
  double sup = 0.0;
  for (int i = 0; i < dim; ++i)
    sup = std::max(sup, std::abs(res.volumes.v[i] - truth[i]));
  CHECK(sup <= 1e-3);
  CHECK(res.volumes.constraint_residual() <= 1e-8);
  CHECK(res.stationarity_residual <= 1e-6);
}

TEST_CASE("volume regression degenerate and error paths") {
  BlockShape shape;
  shape.d = 2;
  shape.k = 2;
  shape.n = 4;
  shape.M = 6;
  std::vector<double> grid{0.3, 0.5, 0.7, 0.9, 1.1};
  const Eigen::MatrixXd G = build_steiner_system(shape, grid);
  CapGrid zero;
  zero.eps_values = grid;
  zero.sigma_ratios.assign(grid.size(), 0.0);

  // v_last = 1 with zero cap measures: all other volumes vanish, and the
  // alternating-sum constraint cannot hold, so it is dropped and reported.
  const RegressionResult res = regress_volumes(zero, G, 1.0);
  CHECK(res.euler_dropped);
  for (std::size_t i = 0; i + 1 < res.volumes.v.size(); ++i)
    CHECK(std::abs(res.volumes.v[i]) <= 1e-6);

  RegressionOptions bad;
  bad.p_reg = 1;
  CHECK_THROWS_AS(regress_volumes(zero, G, 0.5, bad), std::invalid_argument);
  CHECK_THROWS_AS(regress_volumes(zero, G, 1.5), std::domain_error);
  CapGrid mismatched = zero;
  mismatched.sigma_ratios.pop_back();
  CHECK_THROWS_AS(regress_volumes(mismatched, G, 0.5), std::invalid_argument);
}

TEST_CASE("projection-count curve from a literal volume vector") {
  IntrinsicVolumeVector vol;
  vol.v = {0.1, 0.2, 0.3, 0.15, 0.25};
  vol.v_last_fixed = 0.25;

  CHECK(crofton_perr_raw(vol, 1) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(crofton_perr_raw(vol, 0) == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(crofton_perr_raw(vol, 4) == doctest::Approx(0.5).epsilon(1e-14));

  CHECK(crofton_perr(vol, 0) == 1.0);             // forced endpoint
  CHECK(crofton_perr(vol, 5) == 0.0);             // forced endpoint
  CHECK(crofton_perr(vol, 1) == doctest::Approx(0.7));
  CHECK(crofton_perr(vol, 2) <= 1.0);

  // The raw map is linear in the volume vector.
  IntrinsicVolumeVector half = vol;
  for (double& x : half.v) x *= 0.5;
  CHECK(crofton_perr_raw(half, 1) ==
        doctest::Approx(0.5 * crofton_perr_raw(vol, 1)).epsilon(1e-14));

  CHECK_THROWS_AS(crofton_perr_raw(vol, -1), std::domain_error);
  CHECK_THROWS_AS(crofton_perr_raw(vol, 6), std::domain_error);

  // The binomial profile is exactly feasible (dyadic entries, exact sums).
  IntrinsicVolumeVector binv;
  for (double c : {1.0, 7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0})
    binv.v.push_back(c / 128.0);
  binv.v_last_fixed = 1.0 / 128.0;
  CHECK(binv.constraint_residual() <= 1e-15);
}
