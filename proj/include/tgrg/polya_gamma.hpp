#pragma once

#include <Eigen/Dense>

#include "tgrg/models.hpp"
#include "tgrg/quadrature.hpp"

namespace tgrg {

// Density of the Polya-Gamma distribution with shape 1 and tilt 0, evaluated
// by its alternating series. Returns 0 for arguments outside the support or
// far enough into the left tail that every term underflows.
double pg_density(double omega);

// Fixed composite Gauss-Legendre grid on (0, omega_max] used for every
// integral against the PG density. The panel edges crowd toward zero because
// integrands of the form exp(-omega * psi^2 / 2) concentrate there for large
// |psi|; the defaults resolve |mean sums| up to roughly 35 while the omitted
// tail above 20 carries ~2e-11 of PG mass.
struct PgQuadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;    // plain Gauss-Legendre weights
  Eigen::VectorXd density;    // pg_density at the nodes
  Eigen::VectorXd half_mass;  // 0.5 * weights * density, the d(omega)/2 measure
  double omega_max = 0.0;

  int n_points() const { return static_cast<int>(nodes.size()); }

  // Builds the grid and verifies it reproduces the PG normalization and mean;
  // throws ConvergenceError with the achieved residual if it cannot.
  static PgQuadrature make(int points_per_panel = 12, double omega_max = 20.0);
};

// Left side of the Gaussian-mixture representation of the logistic kernel
// with exponent 1: (e^psi)^a / (1 + e^psi) evaluated through the omega
// integral. Exercised in tests against the closed form; only the unit
// exponent is supported.
double logistic_identity(double a, double b, double psi, const PgQuadrature& quad);

// One-step-ahead Gaussian summary of a fitness series: the mean and variance
// of theta_i^{t+1} given information at time t.
struct GaussianPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Closed-form conditional expectation of exp(b*psi - omega*psi^2/2) under
// psi ~ N(mean_i + mean_j, var_i + var_j), with b = a_obs - 1/2. This is the
// integrand profile that multiplies the PG density in the link marginal.
double kernel_K(int a_obs, double omega, double mean_i, double mean_j, double var_i,
                double var_j);

// Per-link quantities that depend only on the variance sum, reusable across
// time steps when scanning a link's history.
struct KernelProfile {
  double var_sum = 0.0;
  Eigen::VectorXd inv_denom8;       // 1 / (8 (1 + omega_k var_sum))
  Eigen::VectorXd mass_over_sqrt;   // half_mass_k / sqrt(1 + omega_k var_sum)
  Eigen::VectorXd four_omega;       // 4 * omega_k
};
KernelProfile make_kernel_profile(double var_sum, const PgQuadrature& quad);

// Probability that the link indicator equals a_obs when the two endpoint
// fitnesses are integrated out against their Gaussian predictions. The result
// is confined to [1e-15, 1 - 1e-15] so downstream likelihoods stay finite; a
// raw value outside [0,1] by more than 1e-7 raises ConvergenceError.
double marginal_link_integral(int a_obs, const GaussianPrediction& node_i,
                              const GaussianPrediction& node_j, const PgQuadrature& quad);
double marginal_link_integral(int a_obs, double mean_sum, const KernelProfile& profile);

// Stationary (unconditional) link expectation for two fitness series, i.e.
// the link marginal evaluated at their stationary means and variances.
double unconditional_link_expectation(const ArParams& node_i, const ArParams& node_j,
                                      const PgQuadrature& quad);

}  // namespace tgrg
