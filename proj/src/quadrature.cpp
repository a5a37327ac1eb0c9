#include "tgrg/quadrature.hpp"

#include <cmath>

#include "tgrg/errors.hpp"

namespace tgrg {

namespace {

// Nodes/weights of a Gaussian rule from the symmetric tridiagonal Jacobi
// matrix: nodes are its eigenvalues, weights mu0 * (first eigenvector
// component)^2 (Golub & Welsch 1969).
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diagonal, double mu0) {
  const int n = static_cast<int>(off_diagonal.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = off_diagonal(k);
    jacobi(k + 1, k) = off_diagonal(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("golub_welsch: eigen decomposition failed");
  QuadratureRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = solver.eigenvectors()(0, k);
    rule.weights(k) = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: need at least one node");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(off, 2.0);
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (!(a < b)) throw ValidationError("gauss_legendre: empty interval");
  QuadratureRule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int k = 0; k < n; ++k) {
    rule.nodes(k) = mid + half * rule.nodes(k);
    rule.weights(k) *= half;
  }
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw ValidationError("gauss_hermite: need at least one node");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(0.5 * k);
  return golub_welsch(off, std::sqrt(M_PI));
}

}  // namespace tgrg
