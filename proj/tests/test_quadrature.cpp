// Tests for the Gaussian quadrature rules.  Small rules are checked against
// closed-form nodes/weights; larger rules are checked through the polynomial
// exactness they are supposed to deliver and against integrals with known
// values.
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "tgrg/quadrature.hpp"

using tgrg::gauss_hermite;
using tgrg::gauss_legendre;
using tgrg::QuadratureRule;

namespace {

double integrate(const QuadratureRule& rule, double (*f)(double)) {
  double acc = 0.0;
  for (int k = 0; k < rule.size(); ++k) acc += rule.weights[k] * f(rule.nodes[k]);
  return acc;
}

// Exact value of \int_{-1}^{1} x^p dx.
double monomial_legendre(int p) { return (p % 2 == 1) ? 0.0 : 2.0 / (p + 1); }

// Exact value of \int x^p e^{-x^2} dx = Gamma((p+1)/2) for even p.
double monomial_hermite(int p) {
  if (p % 2 == 1) return 0.0;
  return std::tgamma((p + 1) / 2.0);
}

}  // namespace

// ============================================================================
// Gauss-Legendre
// ============================================================================

TEST_CASE("two-point Gauss-Legendre matches the closed form") {
  const QuadratureRule rule = gauss_legendre(2);
  REQUIRE(rule.size() == 2);
  const double node = 1.0 / std::sqrt(3.0);
  CHECK(rule.nodes[0] == doctest::Approx(-node).epsilon(1e-14));
  CHECK(rule.nodes[1] == doctest::Approx(node).epsilon(1e-14));
  CHECK(rule.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rule.weights[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("three-point Gauss-Legendre matches the closed form") {
  const QuadratureRule rule = gauss_legendre(3);
  REQUIRE(rule.size() == 3);
  CHECK(rule.nodes[0] == doctest::Approx(-std::sqrt(0.6)).epsilon(1e-14));
  CHECK(std::abs(rule.nodes[1]) < 1e-14);
  CHECK(rule.nodes[2] == doctest::Approx(std::sqrt(0.6)).epsilon(1e-14));
  CHECK(rule.weights[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
  CHECK(rule.weights[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
  CHECK(rule.weights[2] == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("n-point Gauss-Legendre integrates polynomials up to degree 2n-1") {
  for (int n : {1, 2, 5, 8, 16}) {
    const QuadratureRule rule = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double acc = 0.0;
      for (int k = 0; k < rule.size(); ++k)
        acc += rule.weights[k] * std::pow(rule.nodes[k], p);
      CHECK_MESSAGE(acc == doctest::Approx(monomial_legendre(p)).epsilon(1e-12),
                    "n=" << n << " degree=" << p);
    }
  }
}

TEST_CASE("Gauss-Legendre nodes are ascending and weights positive") {
  const QuadratureRule rule = gauss_legendre(12);
  for (int k = 0; k < rule.size(); ++k) {
    CHECK(rule.weights[k] > 0.0);
    if (k > 0) CHECK(rule.nodes[k] > rule.nodes[k - 1]);
  }
  // Weights of a rule on [-1, 1] sum to the interval length.
  CHECK(rule.weights.sum() == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("mapped Gauss-Legendre reproduces integrals on [a, b]") {
  // \int_0^2 x^2 dx = 8/3.
  const QuadratureRule rule = gauss_legendre(4, 0.0, 2.0);
  double acc = 0.0;
  for (int k = 0; k < rule.size(); ++k)
    acc += rule.weights[k] * rule.nodes[k] * rule.nodes[k];
  CHECK(acc == doctest::Approx(8.0 / 3.0).epsilon(1e-13));

  // \int_1^3 e^x dx = e^3 - e.
  const QuadratureRule exp_rule = gauss_legendre(16, 1.0, 3.0);
  CHECK(integrate(exp_rule, [](double x) { return std::exp(x); }) ==
        doctest::Approx(std::exp(3.0) - std::exp(1.0)).epsilon(1e-12));

  // Node range stays inside the mapped interval.
  CHECK(exp_rule.nodes.minCoeff() > 1.0);
  CHECK(exp_rule.nodes.maxCoeff() < 3.0);
}

// ============================================================================
// Gauss-Hermite
// ============================================================================

TEST_CASE("two-point Gauss-Hermite matches the closed form") {
  const QuadratureRule rule = gauss_hermite(2);
  REQUIRE(rule.size() == 2);
  const double node = 1.0 / std::sqrt(2.0);
  const double weight = std::sqrt(std::numbers::pi) / 2.0;
  CHECK(rule.nodes[0] == doctest::Approx(-node).epsilon(1e-14));
  CHECK(rule.nodes[1] == doctest::Approx(node).epsilon(1e-14));
  CHECK(rule.weights[0] == doctest::Approx(weight).epsilon(1e-14));
  CHECK(rule.weights[1] == doctest::Approx(weight).epsilon(1e-14));
}

TEST_CASE("Gauss-Hermite integrates monomials against exp(-x^2)") {
  for (int n : {3, 8, 20, 32}) {
    const QuadratureRule rule = gauss_hermite(n);
    for (int p = 0; p <= 2 * n - 1 && p <= 12; ++p) {
      double acc = 0.0;
      for (int k = 0; k < rule.size(); ++k)
        acc += rule.weights[k] * std::pow(rule.nodes[k], p);
      CHECK_MESSAGE(acc == doctest::Approx(monomial_hermite(p)).epsilon(1e-11),
                    "n=" << n << " degree=" << p);
    }
  }
}

TEST_CASE("Gauss-Hermite handles a non-polynomial integrand") {
  // \int e^{-x^2} cos(x) dx = sqrt(pi) e^{-1/4}.
  const QuadratureRule rule = gauss_hermite(32);
  const double expected = std::sqrt(std::numbers::pi) * std::exp(-0.25);
  CHECK(integrate(rule, [](double x) { return std::cos(x); }) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Gauss-Hermite nodes are symmetric, ascending, weights positive") {
  const QuadratureRule rule = gauss_hermite(15);
  REQUIRE(rule.size() == 15);
  for (int k = 0; k < rule.size(); ++k) {
    CHECK(rule.weights[k] > 0.0);
    if (k > 0) CHECK(rule.nodes[k] > rule.nodes[k - 1]);
    CHECK(rule.nodes[k] == doctest::Approx(-rule.nodes[rule.size() - 1 - k]).epsilon(1e-12));
  }
  CHECK(rule.weights.sum() == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
}
