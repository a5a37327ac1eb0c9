#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tgrg/models.hpp"
#include "tgrg/polya_gamma.hpp"

namespace tgrg {

// Coefficients of the tau-step AR(1) transition: conditioning on a value
// theta, the state tau steps later is Gaussian with mean a_tau + b_tau*theta
// and variance c_tau * sigma^2. As tau grows they approach the stationary
// mean and variance.
struct LagMomentCoefficients {
  double a_tau = 0.0;  // phi0 * (1 + phi1 + ... + phi1^{tau-1})
  double b_tau = 0.0;  // phi1^tau
  double c_tau = 0.0;  // 1 + phi1^2 + ... + phi1^{2(tau-1)}
};

LagMomentCoefficients lag_moment_coefficients(const ArParams& params, int tau);

// P(A^t = 1 and A^{t-tau} = 1) for one link of the pure fitness model in its
// stationary regime, by nested quadrature of the closed-form double-mixture
// representation (two auxiliary variables, one per observation).
double two_point_probability(const ArParams& fp_i, const ArParams& fp_j, int tau,
                             const PgQuadrature& quad);

// Same quantity evaluated without the closed form: the inner expectation is
// the link marginal conditioned on the fitnesses at t-tau, integrated over
// their stationary law with a tensorized Gauss-Hermite rule. Slower and kept
// as an independent cross-check of the transcription above.
double two_point_probability_gh(const ArParams& fp_i, const ArParams& fp_j, int tau,
                                const PgQuadrature& quad, int gh_points = 48);

// Autocorrelation of the link indicator at lag tau:
// (two_point - p^2) / (p (1 - p)) with p the stationary link expectation.
double link_acf(const ArParams& fp_i, const ArParams& fp_j, int tau,
                const PgQuadrature& quad);

// ---------------------------------------------------------------------------
// Preferential-linkage test
// ---------------------------------------------------------------------------

// Trade counts of one ordered pair within a window: n_lb of the n_total
// trades went from this lender to this borrower; the lender made n_l trades
// in total and the borrower received n_b.
struct TradeCounts {
  long n_lb = 0;
  long n_l = 0;
  long n_b = 0;
  long n_total = 0;
};

void validate(const TradeCounts& counts);

// Upper-tail probability P(X >= n_lb) under the hypergeometric null of
// random trading, X ~ H(n_l, n_b, n_total). Computed in log space so counts
// in the thousands do not overflow.
double hypergeom_pvalue(const TradeCounts& counts);

struct ValidatedLink {
  int source = 0;
  int target = 0;
  double p_value = 0.0;
};

struct TradingTestResult {
  std::vector<ValidatedLink> validated;  // pairs significant after correction
  long n_hypotheses = 0;                 // pairs with both margins positive
  double threshold = 0.0;                // significance / n_hypotheses
};

// Tests every ordered pair of a window's trade-count matrix (entry (i,j) =
// trades i->j) against the random-trading null. The Bonferroni divisor is the
// number of pairs with a positive lender margin and a positive borrower
// margin, since only those have a nondegenerate null.
TradingTestResult preferential_trading_test(
    const Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>& trade_counts,
    double significance = 0.05);

// Fraction of links validated by the test per bin of the estimated copy
// weight. Bins split [0,1] evenly; the last bin is closed at 1.
struct StabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  long n_links = 0;
  long n_validated = 0;
  bool defined = false;  // bin contains at least one link
  double fraction = 0.0;
};

std::vector<StabilityBin> stability_vs_validation(const Eigen::MatrixXd& alpha_hat,
                                                  const std::vector<ValidatedLink>& validated,
                                                  int n_bins, bool directed);

}  // namespace tgrg
