#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "blockspt/finite_prob.hpp"

using namespace blockspt;

namespace {

BlockShape ref_shape(int M) {
  BlockShape s;
  s.d = 2;
  s.k = 6;
  s.n = 18;
  s.M = M;
  return s;
}

}  // namespace

TEST_CASE("truncated shifted-chi-square factor: exact special cases") {
  QuadratureSpec spec;
  // At w = 0 the factor is the surviving chi-square mass.
  for (double t1 : {0.0, 0.5, 3.0}) {
    const cplx full = i_lambda4(0.0, t1, 12, spec);
    CHECK(full.real() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(full.imag()) < 1e-12);
  }
  for (double c : {1.0, 3.0}) {
    for (int M : {6, 12}) {
      const cplx trunc = i_lambda4(0.0, -c, M, spec);
      const double expect = 1.0 - reg_lower_gamma(0.5 * M, 0.5 * c * c);
      CHECK(trunc.real() == doctest::Approx(expect).epsilon(1e-9));
      CHECK(std::abs(trunc.imag()) < 1e-12);
    }
  }
  // Characteristic-function modulus never exceeds the available mass.
  for (double w : {0.05, 0.3, 1.0, 4.0}) {
    CHECK(std::abs(i_lambda4(w, 0.7, 10, spec)) <= 1.0 + 1e-12);
    CHECK(std::abs(i_lambda4(w, -1.2, 10, spec)) <=
          1.0 - reg_lower_gamma(5.0, 0.72) + 1e-9);
  }
  CHECK_THROWS_AS(i_lambda4(0.1, 0.0, 0, spec), std::domain_error);
}

TEST_CASE("truncated factor matches a Monte Carlo expectation") {
  QuadratureSpec spec;
  const double w = 0.2, t1 = 1.0;
  const int M = 12;
  const cplx quad = i_lambda4(w, t1, M, spec);

  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int samples = 300000;
  double re = 0.0, im = 0.0;
  for (int s = 0; s < samples; ++s) {
    double z = 0.0;
    for (int i = 0; i < M; ++i) {
      const double g = nd(gen);
      z += g * g;
    }
    const double a = t1 + std::sqrt(z);
    re += std::cos(w * a * a);
    im += -std::sin(w * a * a);
  }
  re /= samples;
  im /= samples;
  CHECK(std::abs(quad.real() - re) < 0.01);
  CHECK(std::abs(quad.imag() - im) < 0.01);
}

TEST_CASE("conditioned width-event probability: pins and monotonicity") {
  QuadratureSpec spec;
  const BlockShape shape = ref_shape(24);
  CHECK(p_lambda_ub(shape, 1.0, 0.0, spec) ==
        doctest::Approx(0.455409).epsilon(1.2e-3));

  double prev = 2.0;
  for (double t1 : {-2.0, 0.0, 1.0, 2.5}) {
    const double p = p_lambda_ub(shape, 1.0, t1, spec);
    CHECK(p <= prev + 1e-9);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
  // A deeply negative shift makes the event certain ...
  CHECK(p_lambda_ub(shape, 1.0, -60.0, spec) >= 1.0 - 1e-6);
  // ... and a large positive one kills it.
  CHECK(p_lambda_ub(shape, 1.0, 8.0, spec) <= 1e-4);

  CHECK_THROWS_AS(p_lambda_ub(shape, -0.5, 0.0, spec), std::domain_error);
}

TEST_CASE("conditioned width-event probability matches direct sampling") {
  // Event: w_lambda(h)^2 >= (t1 + |g|)^2 with
  //   w_lambda^2 = sum_{n-k} max(chi_d - lambda, 0)^2
  //              + sum_k (g_b + lambda)^2 + chi2((d-1)k),
  // |g| ~ chi(M), all independent.
  QuadratureSpec spec;
  const BlockShape shape = ref_shape(24);
  const double lambda = 1.0, t1 = 0.4;
  const double quad = p_lambda_ub(shape, lambda, t1, spec);

  std::mt19937_64 gen(77);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int samples = 150000;
  int hits = 0;
  for (int s = 0; s < samples; ++s) {
    double w2 = 0.0;
    for (int b = 0; b < shape.n - shape.k; ++b) {
      double h = 0.0;
      for (int i = 0; i < shape.d; ++i) {
        const double g = nd(gen);
        h += g * g;
      }
      const double dev = std::max(std::sqrt(h) - lambda, 0.0);
      w2 += dev * dev;
    }
    for (int b = 0; b < shape.k; ++b) {
      const double g = nd(gen) + lambda;
      w2 += g * g;
    }
    for (int i = 0; i < (shape.d - 1) * shape.k; ++i) {
      const double g = nd(gen);
      w2 += g * g;
    }
    double gm2 = 0.0;
    for (int i = 0; i < shape.M; ++i) {
      const double g = nd(gen);
      gm2 += g * g;
    }
    const double rhs = t1 + std::sqrt(gm2);
    if (rhs <= 0.0 || w2 >= rhs * rhs) ++hits;
  }
  const double mc = double(hits) / samples;
  CHECK(std::abs(quad - mc) < 0.006);
}

TEST_CASE("optimized conditioned bound: pins and result fields") {
  QuadratureSpec spec;
  const AgBoundResult mid = p_ub_ag(ref_shape(24), spec);
  CHECK(mid.p_ub_ag == doctest::Approx(0.8817).epsilon(6e-3));
  CHECK(mid.p_ub_ag <= 1.0);
  CHECK(mid.lambda >= 0.0);
  CHECK(mid.lambda <= 3.0 * std::sqrt(2.0) + 1e-9);
  CHECK(std::abs(mid.t1) <= 3.0 * std::sqrt(24.0) + 1e-9);
  CHECK(mid.tail_term >= 0.0);
  // The reported decomposition reassembles the numerator at the optimum.
  const double numer =
      p_lambda_ub(ref_shape(24), mid.lambda, mid.t1, spec);
  CHECK(mid.inner_integral + mid.tail_term ==
        doctest::Approx(numer).epsilon(1e-6));

  const AgBoundResult deep = p_ub_ag(ref_shape(36), spec);
  CHECK(deep.p_ub_ag < 0.05);
  CHECK(deep.p_ub_ag > 0.0);
}
