#pragma once

#include <Eigen/Dense>

namespace tgrg {

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule on [-1, 1] (Golub-Welsch on the Jacobi matrix).
QuadratureRule gauss_legendre(int n);

// Gauss-Legendre rule mapped onto [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
QuadratureRule gauss_hermite(int n);

}  // namespace tgrg
