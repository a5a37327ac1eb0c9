// Tests for the Polya-Gamma machinery: the PG(1,0) density and its fixed
// quadrature grid, the logistic-kernel identity, the Gaussian kernel profile,
// and the marginal link integral. Every nontrivial quantity is checked twice:
// once through the production code path and once through an independent
// oracle (closed form, brute-force grid, or tensorized Gauss-Hermite).
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "tgrg/models.hpp"
#include "tgrg/polya_gamma.hpp"
#include "tgrg/quadrature.hpp"
#include "tgrg/rng.hpp"

using tgrg::ArParams;
using tgrg::GaussianPrediction;
using tgrg::kernel_K;
using tgrg::KernelProfile;
using tgrg::logistic_identity;
using tgrg::make_kernel_profile;
using tgrg::marginal_link_integral;
using tgrg::pg_density;
using tgrg::PgQuadrature;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Brute-force oracle for P(A = a_obs): integrate the Bernoulli likelihood
// against the two Gaussian predictions with a tensorized Gauss-Hermite rule.
// Completely independent of the omega-integral route used in production.
double gh_link_oracle(int a_obs, const GaussianPrediction& node_i,
                      const GaussianPrediction& node_j, int points) {
  const tgrg::QuadratureRule gh = tgrg::gauss_hermite(points);
  const double si = std::sqrt(2.0 * node_i.variance);
  const double sj = std::sqrt(2.0 * node_j.variance);
  double acc = 0.0;
  for (int a = 0; a < gh.size(); ++a) {
    const double ti = node_i.mean + si * gh.nodes[a];
    for (int b = 0; b < gh.size(); ++b) {
      const double tj = node_j.mean + sj * gh.nodes[b];
      const double p1 = logistic(ti + tj);
      acc += gh.weights[a] * gh.weights[b] * (a_obs == 1 ? p1 : 1.0 - p1);
    }
  }
  return acc / std::numbers::pi;  // the two 1/sqrt(pi) normalizations
}

}  // namespace

// ============================================================================
// PG(1,0) density and quadrature grid
// ============================================================================

TEST_CASE("pg_density vanishes off the support and is positive inside") {
  CHECK(pg_density(0.0) == 0.0);
  CHECK(pg_density(-0.5) == 0.0);
  CHECK(pg_density(0.05) > 0.0);
  CHECK(pg_density(0.25) > 0.0);
  CHECK(pg_density(2.0) > 0.0);
}

TEST_CASE("the quadrature grid reproduces the PG normalization and mean") {
  const PgQuadrature quad = PgQuadrature::make();
  CHECK(quad.n_points() == 252);  // 21 panels x 12 points
  CHECK(quad.omega_max == doctest::Approx(20.0));

  const double mass = quad.weights.dot(quad.density);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

  const double mean = (quad.weights.array() * quad.density.array() * quad.nodes.array()).sum();
  CHECK(mean == doctest::Approx(0.25).epsilon(1e-6));

  // half_mass is exactly half the plain product measure.
  for (int k = 0; k < quad.n_points(); ++k)
    CHECK(quad.half_mass[k] == doctest::Approx(0.5 * quad.weights[k] * quad.density[k]));
}

TEST_CASE("the grid reproduces the PG Laplace transform at one half") {
  // E[e^{-omega t}] = 1/cosh(sqrt(t/2)); at t = 1/2 this is 1/cosh(1/2).
  const PgQuadrature quad = PgQuadrature::make();
  double acc = 0.0;
  for (int k = 0; k < quad.n_points(); ++k)
    acc += quad.weights[k] * quad.density[k] * std::exp(-0.5 * quad.nodes[k]);
  CHECK(acc == doctest::Approx(1.0 / std::cosh(0.5)).epsilon(1e-7));
  CHECK(1.0 / std::cosh(0.5) == doctest::Approx(0.8868188839700739).epsilon(1e-12));
}

TEST_CASE("grid nodes stay inside the support and weights are positive") {
  const PgQuadrature quad = PgQuadrature::make();
  for (int k = 0; k < quad.n_points(); ++k) {
    CHECK(quad.nodes[k] > 0.0);
    CHECK(quad.nodes[k] < quad.omega_max);
    CHECK(quad.weights[k] > 0.0);
    if (k > 0) CHECK(quad.nodes[k] > quad.nodes[k - 1]);
  }
}

// ============================================================================
// logistic identity
// ============================================================================

TEST_CASE("logistic_identity matches the closed form at chosen points") {
  const PgQuadrature quad = PgQuadrature::make();
  CHECK(logistic_identity(1.0, 1.0, 0.0, quad) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(logistic_identity(1.0, 1.0, 1.0, quad) ==
        doctest::Approx(0.7310585786300049).epsilon(1e-9));
  CHECK(logistic_identity(0.0, 1.0, 2.0, quad) ==
        doctest::Approx(0.11920292202211755).epsilon(1e-9));
}

TEST_CASE("logistic_identity holds across a psi grid for both outcomes") {
  const PgQuadrature quad = PgQuadrature::make();
  for (int k = 0; k <= 100; ++k) {
    const double psi = -10.0 + 0.2 * k;
    const double p1 = logistic(psi);
    CHECK_MESSAGE(std::abs(logistic_identity(1.0, 1.0, psi, quad) - p1) < 1e-6,
                  "a=1 psi=" << psi);
    CHECK_MESSAGE(std::abs(logistic_identity(0.0, 1.0, psi, quad) - (1.0 - p1)) < 1e-6,
                  "a=0 psi=" << psi);
  }
}

TEST_CASE("logistic_identity rejects exponents other than one") {
  const PgQuadrature quad = PgQuadrature::make();
  CHECK_THROWS_AS(logistic_identity(1.0, 2.0, 0.3, quad), tgrg::ValidationError);
}

// ============================================================================
// kernel_K
// ============================================================================

TEST_CASE("kernel_K at omega zero reduces to a pure exponential moment") {
  // At omega = 0 the kernel is E[e^{b psi}] = e^{b m + b^2 s^2 / 2}, b = a - 1/2.
  const double m_i = 0.4, m_j = 0.3, v_i = 0.2, v_j = 0.3;
  const double m = m_i + m_j, s2 = v_i + v_j;
  CHECK(kernel_K(1, 0.0, m_i, m_j, v_i, v_j) ==
        doctest::Approx(std::exp(0.5 * m + 0.125 * s2)).epsilon(1e-12));
  CHECK(kernel_K(0, 0.0, m_i, m_j, v_i, v_j) ==
        doctest::Approx(std::exp(-0.5 * m + 0.125 * s2)).epsilon(1e-12));
}

TEST_CASE("kernel_K with zero variances collapses to the plain integrand") {
  // Point-mass psi: the kernel is exp(b psi - omega psi^2 / 2).
  const double psi = -0.8, omega = 0.7;
  CHECK(kernel_K(1, omega, -0.5, -0.3, 0.0, 0.0) ==
        doctest::Approx(std::exp(0.5 * psi - 0.5 * omega * psi * psi)).epsilon(1e-12));
  CHECK(kernel_K(0, omega, -0.5, -0.3, 0.0, 0.0) ==
        doctest::Approx(std::exp(-0.5 * psi - 0.5 * omega * psi * psi)).epsilon(1e-12));
}

TEST_CASE("kernel_K matches a Gauss-Hermite oracle on random inputs") {
  // Independent route: psi ~ N(m, s^2) sampled on a 1-D Gauss-Hermite rule.
  const tgrg::QuadratureRule gh = tgrg::gauss_hermite(48);
  tgrg::Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    const double m_i = 2.0 * rng.uniform() - 1.0;
    const double m_j = 2.0 * rng.uniform() - 1.0;
    const double v_i = 0.05 + rng.uniform();
    const double v_j = 0.05 + rng.uniform();
    const double omega = 3.0 * rng.uniform();
    const int a_obs = rng.uniform() < 0.5 ? 0 : 1;
    const double b = a_obs - 0.5;

    const double m = m_i + m_j;
    const double s = std::sqrt(2.0 * (v_i + v_j));
    double acc = 0.0;
    for (int k = 0; k < gh.size(); ++k) {
      const double psi = m + s * gh.nodes[k];
      acc += gh.weights[k] * std::exp(b * psi - 0.5 * omega * psi * psi);
    }
    acc /= std::sqrt(std::numbers::pi);

    CHECK_MESSAGE(kernel_K(a_obs, omega, m_i, m_j, v_i, v_j) ==
                      doctest::Approx(acc).epsilon(1e-9),
                  "trial " << trial);
  }
}

// ============================================================================
// marginal link integral
// ============================================================================

TEST_CASE("the two marginal outcomes are complementary") {
  const PgQuadrature quad = PgQuadrature::make();
  const GaussianPrediction node_i{0.3, 0.4};
  const GaussianPrediction node_j{-0.6, 0.9};
  const double p1 = marginal_link_integral(1, node_i, node_j, quad);
  const double p0 = marginal_link_integral(0, node_i, node_j, quad);
  CHECK(p1 + p0 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(p1 > 0.0);
  CHECK(p1 < 1.0);
}

TEST_CASE("zero-variance marginals collapse to the logistic function") {
  const PgQuadrature quad = PgQuadrature::make();
  for (double sum : {-4.0, -1.0, 0.0, 0.5, 3.0}) {
    const GaussianPrediction node_i{sum, 0.0};
    const GaussianPrediction node_j{0.0, 0.0};
    CHECK(marginal_link_integral(1, node_i, node_j, quad) ==
          doctest::Approx(logistic(sum)).epsilon(1e-7));
  }
}

TEST_CASE("marginal respects extreme mean sums through the clamp") {
  const PgQuadrature quad = PgQuadrature::make();
  const GaussianPrediction far_up{30.0, 0.5};
  const GaussianPrediction origin{0.0, 0.5};
  const double p1 = marginal_link_integral(1, far_up, origin, quad);
  CHECK(p1 >= 1.0 - 1e-7);
  CHECK(p1 <= 1.0 - 1e-15);

  const GaussianPrediction far_down{-30.0, 0.5};
  const double q1 = marginal_link_integral(1, far_down, origin, quad);
  CHECK(q1 <= 1e-7);
  CHECK(q1 >= 1e-15);
}

TEST_CASE("marginal is increasing in the mean sum") {
  const PgQuadrature quad = PgQuadrature::make();
  double prev = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const GaussianPrediction node_i{-6.0 + 0.3 * k, 0.7};
    const GaussianPrediction node_j{0.0, 0.4};
    const double p = marginal_link_integral(1, node_i, node_j, quad);
    if (k > 0) CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("marginal matches the tensorized Gauss-Hermite oracle") {
  const PgQuadrature quad = PgQuadrature::make();
  tgrg::Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    GaussianPrediction node_i{4.0 * rng.uniform() - 2.0, 0.02 + 1.5 * rng.uniform()};
    GaussianPrediction node_j{4.0 * rng.uniform() - 2.0, 0.02 + 1.5 * rng.uniform()};
    const int a_obs = rng.uniform() < 0.5 ? 0 : 1;
    const double via_omega = marginal_link_integral(a_obs, node_i, node_j, quad);
    const double via_gh = gh_link_oracle(a_obs, node_i, node_j, 48);
    CHECK_MESSAGE(std::abs(via_omega - via_gh) < 1e-5,
                  "trial " << trial << " omega-route " << via_omega << " gh-route " << via_gh);
  }
}

TEST_CASE("the profile route agrees with the prediction route") {
  const PgQuadrature quad = PgQuadrature::make();
  const GaussianPrediction node_i{0.7, 0.3};
  const GaussianPrediction node_j{-0.2, 0.5};
  const KernelProfile profile = make_kernel_profile(node_i.variance + node_j.variance, quad);
  for (int a_obs : {0, 1}) {
    const double direct = marginal_link_integral(a_obs, node_i, node_j, quad);
    const double via_profile =
        marginal_link_integral(a_obs, node_i.mean + node_j.mean, profile);
    CHECK(std::abs(direct - via_profile) <= 1e-12);
  }
}

// ============================================================================
// unconditional link expectation
// ============================================================================

TEST_CASE("symmetric stationary fitnesses give an expectation of one half") {
  const PgQuadrature quad = PgQuadrature::make();
  ArParams node{0.0, 0.5, 0.3};  // stationary mean 0
  CHECK(tgrg::unconditional_link_expectation(node, node, quad) ==
        doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("unconditional expectation is symmetric in its arguments") {
  const PgQuadrature quad = PgQuadrature::make();
  ArParams a{0.4, 0.6, 0.5};
  ArParams b{-0.3, 0.2, 0.8};
  CHECK(tgrg::unconditional_link_expectation(a, b, quad) ==
        doctest::Approx(tgrg::unconditional_link_expectation(b, a, quad)).epsilon(1e-14));
}

TEST_CASE("unconditional expectation matches its Gauss-Hermite oracle") {
  const PgQuadrature quad = PgQuadrature::make();
  ArParams a{0.5, 0.7, 0.4};
  ArParams b{-0.8, -0.3, 0.6};
  const auto [ma, va] = tgrg::stationary_moments(a);
  const auto [mb, vb] = tgrg::stationary_moments(b);
  const double oracle = gh_link_oracle(1, GaussianPrediction{ma, va},
                                       GaussianPrediction{mb, vb}, 48);
  CHECK(tgrg::unconditional_link_expectation(a, b, quad) ==
        doctest::Approx(oracle).epsilon(1e-5));
}
