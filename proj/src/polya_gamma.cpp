#include "tgrg/polya_gamma.hpp"

#include <cmath>
#include <sstream>

#include "tgrg/errors.hpp"

namespace tgrg {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Panel edge shape for the composite grid, expressed on [0, 20]. The lower
// panels resolve the narrow ridge that p(omega) * exp(-omega psi^2 / 2)
// develops near omega ~ 1/(2|psi|) when |psi| is large.
constexpr double kPanelShape[] = {0.0,   5e-4, 1e-3, 2e-3, 3.5e-3, 6e-3, 1e-2, 1.7e-2,
                                  3e-2,  5e-2, 8e-2, 0.13, 0.22,   0.36, 0.6,  1.0,
                                  1.7,   2.8,  4.7,  7.8,  13.0,   20.0};
constexpr int kPanelCount = sizeof(kPanelShape) / sizeof(kPanelShape[0]) - 1;

}  // namespace

double pg_density(double omega) {
  if (!(omega > 0.0)) return 0.0;
  const double inv8 = 1.0 / (8.0 * omega);
  // Every term carries exp(-(2n+1)^2 / (8 omega)); once the leading one
  // underflows the density is zero to double precision.
  if (inv8 > 700.0) return 0.0;
  // Alternating series in k = 2n+1. Term magnitudes peak at k ~ 2 sqrt(omega),
  // so force the summation past that index before testing for convergence.
  const int n_min = static_cast<int>(std::ceil(std::sqrt(omega)));
  double sum = 0.0;
  for (int n = 0; n < 200; ++n) {
    const double k = 2.0 * n + 1.0;
    const double term = k * std::exp(-k * k * inv8);
    sum += (n % 2 == 0) ? term : -term;
    if (n >= n_min && term < 1e-17 * std::abs(sum) + 1e-300)
      return sum / std::sqrt(kTwoPi * omega * omega * omega);
  }
  throw ConvergenceError("pg_density: series did not converge at omega=" +
                         std::to_string(omega));
}

PgQuadrature PgQuadrature::make(int points_per_panel, double omega_max) {
  if (points_per_panel < 2) throw ValidationError("PgQuadrature: need >= 2 points per panel");
  if (!(omega_max > 0.0)) throw ValidationError("PgQuadrature: omega_max must be positive");
  const double scale = omega_max / kPanelShape[kPanelCount];

  PgQuadrature quad;
  quad.omega_max = omega_max;
  const int total = kPanelCount * points_per_panel;
  quad.nodes.resize(total);
  quad.weights.resize(total);
  quad.density.resize(total);
  quad.half_mass.resize(total);

  const QuadratureRule base = gauss_legendre(points_per_panel);
  int pos = 0;
  for (int p = 0; p < kPanelCount; ++p) {
    const double a = scale * kPanelShape[p];
    const double b = scale * kPanelShape[p + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int k = 0; k < points_per_panel; ++k, ++pos) {
      quad.nodes(pos) = mid + half * base.nodes(k);
      quad.weights(pos) = half * base.weights(k);
      quad.density(pos) = pg_density(quad.nodes(pos));
      quad.half_mass(pos) = 0.5 * quad.weights(pos) * quad.density(pos);
    }
  }

  // The grid must reproduce the distribution it claims to integrate against:
  // unit mass and mean 1/4 (up to the truncated right tail).
  const double mass = quad.weights.dot(quad.density);
  const double mean = (quad.weights.array() * quad.density.array() * quad.nodes.array()).sum();
  if (std::abs(mass - 1.0) > 1e-8 || std::abs(mean - 0.25) > 1e-7) {
    std::ostringstream msg;
    msg << "PgQuadrature: grid fails PG moment checks, mass residual "
        << std::abs(mass - 1.0) << ", mean residual " << std::abs(mean - 0.25);
    throw ConvergenceError(msg.str());
  }
  return quad;
}

double logistic_identity(double a, double b, double psi, const PgQuadrature& quad) {
  if (b != 1.0)
    throw ValidationError("logistic_identity: only unit exponent (b = 1) is supported");
  const double half_psi2 = 0.5 * psi * psi;
  double integral = 0.0;
  for (int k = 0; k < quad.n_points(); ++k)
    integral += quad.half_mass(k) * std::exp(-quad.nodes(k) * half_psi2);
  return 2.0 * std::exp((a - 0.5) * psi) * integral;
}

double kernel_K(int a_obs, double omega, double mean_i, double mean_j, double var_i,
                double var_j) {
  if (a_obs != 0 && a_obs != 1)
    throw ValidationError("kernel_K: link indicator must be 0 or 1");
  if (var_i < 0.0 || var_j < 0.0) throw ValidationError("kernel_K: negative variance");
  const double m = mean_i + mean_j;
  const double s2 = var_i + var_j;
  const double denom = 1.0 + omega * s2;
  const double expo = (s2 + 4.0 * m * (2.0 * a_obs - 1.0 - omega * m)) / (8.0 * denom);
  return std::exp(expo) / std::sqrt(denom);
}

KernelProfile make_kernel_profile(double var_sum, const PgQuadrature& quad) {
  if (var_sum < 0.0) throw ValidationError("make_kernel_profile: negative variance sum");
  KernelProfile profile;
  profile.var_sum = var_sum;
  const int n = quad.n_points();
  profile.inv_denom8.resize(n);
  profile.mass_over_sqrt.resize(n);
  profile.four_omega.resize(n);
  for (int k = 0; k < n; ++k) {
    const double denom = 1.0 + quad.nodes(k) * var_sum;
    profile.inv_denom8(k) = 1.0 / (8.0 * denom);
    profile.mass_over_sqrt(k) = quad.half_mass(k) / std::sqrt(denom);
    profile.four_omega(k) = 4.0 * quad.nodes(k);
  }
  return profile;
}

double marginal_link_integral(int a_obs, double mean_sum, const KernelProfile& profile) {
  if (a_obs != 0 && a_obs != 1)
    throw ValidationError("marginal_link_integral: link indicator must be 0 or 1");
  const double m = mean_sum;
  const double c1 = profile.var_sum + 4.0 * m * (2.0 * a_obs - 1.0);
  const double m2 = m * m;
  double raw = 0.0;
  const int n = static_cast<int>(profile.inv_denom8.size());
  const double* inv8 = profile.inv_denom8.data();
  const double* mass = profile.mass_over_sqrt.data();
  const double* fom = profile.four_omega.data();
  for (int k = 0; k < n; ++k)
    raw += mass[k] * std::exp((c1 - fom[k] * m2) * inv8[k]);
  if (raw < -1e-7 || raw > 1.0 + 1e-7) {
    std::ostringstream msg;
    msg << "marginal_link_integral: value " << raw << " outside [0,1] at mean sum " << m
        << ", variance sum " << profile.var_sum << " (excess "
        << std::max(-raw, raw - 1.0) << ")";
    throw ConvergenceError(msg.str());
  }
  // Keep strictly inside (0,1) so mixture logarithms stay finite.
  return std::min(std::max(raw, 1e-15), 1.0 - 1e-15);
}

double marginal_link_integral(int a_obs, const GaussianPrediction& node_i,
                              const GaussianPrediction& node_j, const PgQuadrature& quad) {
  if (node_i.variance < 0.0 || node_j.variance < 0.0)
    throw ValidationError("marginal_link_integral: negative prediction variance");
  const KernelProfile profile = make_kernel_profile(node_i.variance + node_j.variance, quad);
  return marginal_link_integral(a_obs, node_i.mean + node_j.mean, profile);
}

double unconditional_link_expectation(const ArParams& node_i, const ArParams& node_j,
                                      const PgQuadrature& quad) {
  const auto [mean_i, var_i] = stationary_moments(node_i);
  const auto [mean_j, var_j] = stationary_moments(node_j);
  return marginal_link_integral(1, GaussianPrediction{mean_i, var_i},
                                GaussianPrediction{mean_j, var_j}, quad);
}

}  // namespace tgrg
