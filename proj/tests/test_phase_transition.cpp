#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "blockspt/phase_transition.hpp"

using namespace blockspt;

TEST_CASE("weak threshold matches tabulated reference values") {
  // Reference values for beta_w = 1/3 at block sizes 2 and 10.
  const PTPoint p2 = alpha_weak(1.0 / 3.0, 2);
  CHECK(p2.alpha_w == doctest::Approx(0.63613).epsilon(2e-4));
  const PTPoint p10 = alpha_weak(1.0 / 3.0, 10);
  CHECK(p10.alpha_w == doctest::Approx(0.57674).epsilon(2e-4));
}

TEST_CASE("threshold point satisfies its defining stationarity conditions") {
  for (int d : {2, 3, 10}) {
    for (double beta : {0.1, 1.0 / 3.0, 0.6}) {
      const PTPoint p = alpha_weak(beta, d);
      // The inner parameter lies strictly between beta and 1, and the
      // threshold it induces lies strictly between beta and 1.
      CHECK(p.theta_hat > beta);
      CHECK(p.theta_hat < 1.0);
      CHECK(p.alpha_w > beta);
      CHECK(p.alpha_w < 1.0);
      CHECK(p.d == d);
      CHECK(p.beta_w == doctest::Approx(beta));
      // The fixed-point residual of the defining equation vanishes.
      CHECK(std::abs(detail::theta_equation(p.theta_hat, beta, d)) < 1e-8);
    }
  }
}

TEST_CASE("weak threshold is monotone in sparsity and block size") {
  double prev = 0.0;
  for (double beta = 0.05; beta < 0.95; beta += 0.1) {
    const double a = alpha_weak(beta, 2).alpha_w;
    CHECK(a > prev);
    prev = a;
  }
  // Larger blocks need fewer measurements at fixed beta_w.
  for (double beta : {0.2, 1.0 / 3.0, 0.5}) {
    const double a2 = alpha_weak(beta, 2).alpha_w;
    const double a5 = alpha_weak(beta, 5).alpha_w;
    const double a10 = alpha_weak(beta, 10).alpha_w;
    CHECK(a5 < a2);
    CHECK(a10 < a5);
  }
}

TEST_CASE("threshold curve evaluates pointwise and validates its grid") {
  const std::vector<double> grid{0.1, 0.25, 1.0 / 3.0, 0.5, 0.8};
  const auto curve = pt_curve(2, grid);
  REQUIRE(curve.points.size() == grid.size());
  CHECK(curve.skipped.empty());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const PTPoint direct = alpha_weak(grid[i], 2);
    CHECK(curve.points[i].alpha_w ==
          doctest::Approx(direct.alpha_w).epsilon(1e-14));
    CHECK(curve.points[i].beta_w == doctest::Approx(grid[i]));
  }
  CHECK_THROWS_AS(pt_curve(2, {0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(pt_curve(2, {0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(pt_curve(2, {0.5, 0.4}), std::invalid_argument);
}

TEST_CASE("inverse map recovers the sparsity from its threshold") {
  for (int d : {2, 10}) {
    for (double beta : {0.2, 1.0 / 3.0, 0.55}) {
      const double alpha = alpha_weak(beta, d).alpha_w;
      CHECK(beta_weak_of_alpha(alpha, d) == doctest::Approx(beta).epsilon(1e-7));
    }
  }
}
