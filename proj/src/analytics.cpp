#include "tgrg/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tgrg/errors.hpp"
#include "tgrg/quadrature.hpp"

namespace tgrg {

LagMomentCoefficients lag_moment_coefficients(const ArParams& params, int tau) {
  if (tau < 1) throw ValidationError("lag_moment_coefficients: tau must be >= 1");
  if (!(std::abs(params.phi1) < 1.0))
    throw ValidationError("lag_moment_coefficients: |phi1| must be < 1");
  LagMomentCoefficients out;
  double pow1 = 1.0, pow2 = 1.0;  // phi1^t and phi1^{2t}
  for (int t = 0; t < tau; ++t) {
    out.a_tau += pow1;
    out.c_tau += pow2;
    pow1 *= params.phi1;
    pow2 *= params.phi1 * params.phi1;
  }
  out.a_tau *= params.phi0;
  out.b_tau = pow1;
  return out;
}

namespace {

// All pair-level constants of the closed-form double-mixture integrand.
struct TwoPointConstants {
  double mu_i, mu_j;    // stationary means
  double st_i, st_j;    // stationary variances
  double a_i, a_j, b_i, b_j;
  double cs;            // C_i sigma_i^2 + C_j sigma_j^2
};

TwoPointConstants two_point_constants(const ArParams& fp_i, const ArParams& fp_j, int tau) {
  const auto [mu_i, st_i] = stationary_moments(fp_i);
  const auto [mu_j, st_j] = stationary_moments(fp_j);
  const LagMomentCoefficients li = lag_moment_coefficients(fp_i, tau);
  const LagMomentCoefficients lj = lag_moment_coefficients(fp_j, tau);
  TwoPointConstants c;
  c.mu_i = mu_i;
  c.mu_j = mu_j;
  c.st_i = st_i;
  c.st_j = st_j;
  c.a_i = li.a_tau;
  c.a_j = lj.a_tau;
  c.b_i = li.b_tau;
  c.b_j = lj.b_tau;
  c.cs = li.c_tau * fp_i.sigma * fp_i.sigma + lj.c_tau * fp_j.sigma * fp_j.sigma;
  return c;
}

// Shared denominator of the exponent and the square root, and the exponent
// numerator, for one (omega, zeta) pair. Kept as a direct transcription of
// the closed form rather than an expanded polynomial: the expression is
// checked against independent integration routes in the tests.
double two_point_denominator(const TwoPointConstants& c, double omega, double zeta) {
  const double db = c.b_i - c.b_j;
  return 1.0 + zeta * (c.st_i + c.st_j) +
         omega * (c.cs + c.b_i * c.b_i * c.st_i + c.b_j * c.b_j * c.st_j) +
         zeta * omega * (c.st_i * c.cs + c.st_j * c.cs + c.st_i * c.st_j * db * db);
}

double two_point_numerator(const TwoPointConstants& c, double omega, double zeta) {
  const double db = c.b_i - c.b_j;
  const double asum = c.a_i + c.a_j;
  const double musum = c.mu_i + c.mu_j;

  const double base = 4.0 * asum + 4.0 * (1.0 + c.b_i) * c.mu_i + 4.0 * (1.0 + c.b_j) * c.mu_j +
                      c.cs + (1.0 + c.b_i) * (1.0 + c.b_i) * c.st_i +
                      (1.0 + c.b_j) * (1.0 + c.b_j) * c.st_j;

  const double zeta_part =
      c.st_i * c.st_j * db * db - 4.0 * musum * musum +
      c.st_i * (4.0 * asum + 4.0 * c.mu_j * (c.b_j - c.b_i) + c.cs) +
      c.st_j * (4.0 * asum + 4.0 * c.mu_i * (c.b_i - c.b_j) + c.cs);

  const double bm = c.b_i * c.mu_i + c.b_j * c.mu_j;
  const double omega_part =
      4.0 * asum * asum + 4.0 * bm * (2.0 * asum + bm) +
      4.0 * musum * (-1.0 + zeta * musum) * c.cs +
      c.st_i * (4.0 * (asum + (c.b_j - c.b_i) * c.mu_j) *
                    (c.b_i * (1.0 - zeta * c.mu_j) + zeta * (asum + c.b_j * c.mu_j)) -
                c.cs) +
      c.st_j * (4.0 * (asum + (c.b_i - c.b_j) * c.mu_i) *
                    (c.b_j * (1.0 - zeta * c.mu_i) + zeta * (asum + c.b_i * c.mu_i)) -
                c.cs) -
      c.st_i * c.st_j * db * db;

  return base + zeta * zeta_part - omega * omega_part;
}

}  // namespace

double two_point_probability(const ArParams& fp_i, const ArParams& fp_j, int tau,
                             const PgQuadrature& quad) {
  const TwoPointConstants c = two_point_constants(fp_i, fp_j, tau);
  const int m = quad.n_points();
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    const double omega = quad.nodes(k);
    double inner = 0.0;
    for (int l = 0; l < m; ++l) {
      const double zeta = quad.nodes(l);
      const double d = two_point_denominator(c, omega, zeta);
      inner += quad.half_mass(l) *
               std::exp(two_point_numerator(c, omega, zeta) / (8.0 * d)) / std::sqrt(d);
    }
    total += quad.half_mass(k) * inner;
  }
  if (!(total > -1e-7 && total < 1.0 + 1e-7)) {
    std::ostringstream msg;
    msg << "two_point_probability: result " << total << " outside [0,1]";
    throw ConvergenceError(msg.str());
  }
  return std::min(std::max(total, 0.0), 1.0);
}

double two_point_probability_gh(const ArParams& fp_i, const ArParams& fp_j, int tau,
                                const PgQuadrature& quad, int gh_points) {
  const TwoPointConstants c = two_point_constants(fp_i, fp_j, tau);
  const QuadratureRule gh = gauss_hermite(gh_points);
  const KernelProfile profile = make_kernel_profile(c.cs, quad);
  const double si = std::sqrt(2.0 * c.st_i);
  const double sj = std::sqrt(2.0 * c.st_j);
  constexpr double kInvPi = 0.31830988618379067154;

  double total = 0.0;
  for (int k = 0; k < gh_points; ++k) {
    const double ti = c.mu_i + si * gh.nodes(k);
    double inner = 0.0;
    for (int l = 0; l < gh_points; ++l) {
      const double tj = c.mu_j + sj * gh.nodes(l);
      // Conditioned on the fitnesses tau steps back, the later observation's
      // marginal is the standard link integral at the bridged moments.
      const double mean_sum = c.a_i + c.b_i * ti + c.a_j + c.b_j * tj;
      inner += gh.weights(l) * link_probability(ti + tj) *
               marginal_link_integral(1, mean_sum, profile);
    }
    total += gh.weights(k) * inner;
  }
  return total * kInvPi;
}

double link_acf(const ArParams& fp_i, const ArParams& fp_j, int tau, const PgQuadrature& quad) {
  const double p = unconditional_link_expectation(fp_i, fp_j, quad);
  const double denom = p * (1.0 - p);
  if (denom < 1e-12)
    throw ValidationError("link_acf: degenerate link marginal (p is 0 or 1)");
  const double pp = two_point_probability(fp_i, fp_j, tau, quad);
  const double acf = (pp - p * p) / denom;
  return std::min(std::max(acf, -1.0), 1.0);
}

// ---------------------------------------------------------------------------
// Preferential-linkage test
// ---------------------------------------------------------------------------

void validate(const TradeCounts& counts) {
  if (counts.n_lb < 0 || counts.n_l < 0 || counts.n_b < 0 || counts.n_total < 0)
    throw ValidationError("trade counts: negative count");
  if (counts.n_lb > counts.n_l || counts.n_lb > counts.n_b)
    throw ValidationError("trade counts: pair count exceeds a margin");
  if (counts.n_l > counts.n_total || counts.n_b > counts.n_total)
    throw ValidationError("trade counts: margin exceeds the window total");
}

namespace {

double log_choose(long n, long k) {
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

}  // namespace

double hypergeom_pvalue(const TradeCounts& counts) {
  validate(counts);
  if (counts.n_lb == 0) return 1.0;

  const long k_max = std::min(counts.n_l, counts.n_b);
  const long k_min = std::max({counts.n_lb, counts.n_l + counts.n_b - counts.n_total, 0L});
  if (k_min > k_max) return 0.0;

  const double log_denom = log_choose(counts.n_total, counts.n_b);
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>(k_max - k_min + 1));
  for (long k = k_min; k <= k_max; ++k) {
    const double lt = log_choose(counts.n_l, k) +
                      log_choose(counts.n_total - counts.n_l, counts.n_b - k) - log_denom;
    log_terms.push_back(lt);
    peak = std::max(peak, lt);
  }
  double sum = 0.0;
  for (const double lt : log_terms) sum += std::exp(lt - peak);
  const double p = std::exp(peak) * sum;
  return std::min(std::max(p, 0.0), 1.0);
}

TradingTestResult preferential_trading_test(
    const Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>& trade_counts,
    double significance) {
  const int n = static_cast<int>(trade_counts.rows());
  if (trade_counts.cols() != n)
    throw ValidationError("preferential_trading_test: count matrix must be square");
  if (!(significance > 0.0 && significance < 1.0))
    throw ValidationError("preferential_trading_test: significance must be in (0,1)");
  for (int i = 0; i < n; ++i) {
    if (trade_counts(i, i) != 0)
      throw ValidationError("preferential_trading_test: self-trades on the diagonal");
    for (int j = 0; j < n; ++j)
      if (trade_counts(i, j) < 0)
        throw ValidationError("preferential_trading_test: negative count");
  }

  Eigen::VectorX<long> lends = Eigen::VectorX<long>::Zero(n);
  Eigen::VectorX<long> borrows = Eigen::VectorX<long>::Zero(n);
  long total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      lends(i) += trade_counts(i, j);
      borrows(j) += trade_counts(i, j);
      total += trade_counts(i, j);
    }

  TradingTestResult out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && lends(i) > 0 && borrows(j) > 0) ++out.n_hypotheses;
  out.threshold = out.n_hypotheses > 0 ? significance / out.n_hypotheses : significance;
  if (out.n_hypotheses == 0) return out;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || lends(i) == 0 || borrows(j) == 0) continue;
      TradeCounts tc;
      tc.n_lb = trade_counts(i, j);
      tc.n_l = lends(i);
      tc.n_b = borrows(j);
      tc.n_total = total;
      const double p = hypergeom_pvalue(tc);
      if (p < out.threshold) out.validated.push_back({i, j, p});
    }
  return out;
}

std::vector<StabilityBin> stability_vs_validation(const Eigen::MatrixXd& alpha_hat,
                                                  const std::vector<ValidatedLink>& validated,
                                                  int n_bins, bool directed) {
  const int n = static_cast<int>(alpha_hat.rows());
  if (alpha_hat.cols() != n)
    throw ValidationError("stability_vs_validation: alpha matrix must be square");
  if (n_bins < 1) throw ValidationError("stability_vs_validation: need at least one bin");

  std::set<std::pair<int, int>> validated_set;
  for (const ValidatedLink& link : validated) validated_set.insert({link.source, link.target});

  std::vector<StabilityBin> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    bins[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / n_bins;
    bins[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / n_bins;
  }
  for (int i = 0; i < n; ++i)
    for (int j = directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      const double a = alpha_hat(i, j);
      if (!(a >= 0.0 && a <= 1.0))
        throw ValidationError("stability_vs_validation: copy weight outside [0,1]");
      int b = std::min(static_cast<int>(a * n_bins), n_bins - 1);
      bins[static_cast<std::size_t>(b)].n_links += 1;
      if (validated_set.count({i, j})) bins[static_cast<std::size_t>(b)].n_validated += 1;
    }
  for (StabilityBin& bin : bins) {
    bin.defined = bin.n_links > 0;
    bin.fraction = bin.defined ? static_cast<double>(bin.n_validated) / bin.n_links : 0.0;
  }
  return bins;
}

}  // namespace tgrg
