#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tgrg/models.hpp"
#include "tgrg/polya_gamma.hpp"
#include "tgrg/quadrature.hpp"
#include "tgrg/temporal_network.hpp"

namespace tgrg {

using LatentState = FitnessTrajectory;

// Tolerances and iteration caps for estimation. Residuals of the filtering
// and snapshot stationarity conditions are measured in fitness units
// (equations scaled by the prior variance) and expected degrees respectively.
struct EmConfig {
  double filter_tol = 1e-8;
  int filter_max_sweeps = 200;
  double alpha_tol = 1e-10;
  double phi_tol = 1e-6;
  int phi_max_iters = 200;
  double em_tol = 1e-4;
  int em_max_iters = 100;
  double theta_clamp = 30.0;
  int gh_points = 32;            // Gauss-Hermite size for posterior moments
  int pg_points_per_panel = 12;  // composite grid resolution for PG integrals
  double pg_omega_max = 20.0;
  int n_workers = 1;
};

void validate(const EmConfig& config);

// ---------------------------------------------------------------------------
// Link-copying maximum likelihood
// ---------------------------------------------------------------------------

struct Dar1Estimate {
  double alpha = 0.0;
  double chi = 0.0;
  bool degenerate = false;  // constant series: alpha pinned to 1, chi = mean
};

// Exact per-link likelihood of the copy mixture, from transition counts.
double dar1_log_likelihood(const LinkSeries& series, double alpha, double chi);

// Joint MLE of (alpha, chi) for one link by alternating concave 1-D solves
// after a coarse grid start.
Dar1Estimate dar1_mle(const LinkSeries& series);

// ---------------------------------------------------------------------------
// Static per-snapshot fitness (the naive initializer)
// ---------------------------------------------------------------------------

struct SsiSnapshot {
  Eigen::VectorXd gamma;            // series layout (out block then in block)
  std::vector<int> clamped_series;  // boundary solutions, e.g. isolated nodes
};

// Fits static fitnesses to one snapshot by matching every expected degree to
// its observed degree (Gauss-Seidel over strictly monotone 1-D equations).
SsiSnapshot ssi_snapshot(const AdjacencyMatrix& a, bool directed, const EmConfig& config);

struct Ar1Fit {
  ArParams value;
  bool degenerate = false;  // constant regressor; phi1 forced to 0
  bool clipped = false;     // |phi1| hit the stationarity bound
};

// Conditional least squares for one AR(1) series (needs >= 3 points).
Ar1Fit ar1_fit(const Eigen::VectorXd& series);

struct SsiResult {
  LatentState latent;      // snapshot-wise fitness paths
  FitnessParams fitness;   // AR(1) fits to those paths
  Eigen::MatrixXd alpha;   // naive copy weights (zero when the model has none)
  int reference_series = -1;  // directed gauge anchor, -1 when not used
  std::vector<std::string> warnings;
};

// Full naive estimate: per-snapshot fits, AR(1) regressions, and (for the
// mixture model) per-link copy weights from the same naive inputs.
SsiResult ssi_initialize(const TemporalNetwork& net, ModelKind kind, const EmConfig& config,
                         const PgQuadrature& quad);

// ---------------------------------------------------------------------------
// Filtering and the learning steps
// ---------------------------------------------------------------------------

// One filtering update: point estimates for every series at time t given the
// estimates at t-1 and the snapshots at t and t-1. Gauss-Seidel over series in
// ascending order, each solving its own stationarity equation; estimates are
// confined to [-theta_clamp, theta_clamp]. pinned_series (if >= 0) is held at
// pinned_value to fix the directed gauge.
Eigen::VectorXd filter_step(const AdjacencyMatrix& a_t, const AdjacencyMatrix& a_prev,
                            const Eigen::VectorXd& theta_prev, const DarTgrgParams& params,
                            const EmConfig& config, int pinned_series = -1,
                            double pinned_value = 0.0);

// Largest absolute stationarity residual at theta_t (fitness units). Pinned
// and boundary-clamped series are excluded: their equations are not solved.
double filter_residual(const AdjacencyMatrix& a_t, const AdjacencyMatrix& a_prev,
                       const Eigen::VectorXd& theta_t, const Eigen::VectorXd& theta_prev,
                       const DarTgrgParams& params, const EmConfig& config,
                       int pinned_series = -1);

// Copy-weight score root for one link, given the per-step repeat indicators
// and marginal link integrals. Monotone in alpha, so the root (or boundary)
// is unique; iterations stop once the bracket is narrower than tol.
double learn_alpha_from_inputs(const std::vector<std::uint8_t>& repeat_indicator,
                               const std::vector<double>& link_integrals, double tol);

// Convenience wrapper that builds the inputs from filtered trajectories: the
// integrals use one-step predictions phi0 + phi1 * theta^{t-1} with variance
// sigma^2 for both endpoint series.
double learn_alpha(const LinkSeries& series, const Eigen::VectorXd& theta_src,
                   const Eigen::VectorXd& theta_dst, const ArParams& fp_src,
                   const ArParams& fp_dst, const PgQuadrature& quad, double tol = 1e-10);

struct PosteriorMoments {
  double mean = 0.0;
  double second_moment = 0.0;  // raw, not central
};

// Moments of the one-dimensional smoothing density of series `series` at time
// t: its AR prior around the previous estimate times the copy-mixture factors
// of every incident link, other series held at their filtered values.
// Integration is Gauss-Hermite recentred on the density's mode with the local
// curvature as scale, which keeps the rule accurate when the likelihood is
// much sharper than the prior.
PosteriorMoments posterior_moments(int series, const AdjacencyMatrix& a_t,
                                   const AdjacencyMatrix& a_prev,
                                   const Eigen::VectorXd& theta_t, double theta_prev_value,
                                   const DarTgrgParams& params,
                                   const QuadratureRule& gauss_hermite_rule);

struct PhiFit {
  ArParams value;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  bool clipped = false;
};

// Fixed-point update of one series' AR(1) triple: posterior moments at the
// current parameters feed normal equations for (phi0, phi1) and an explicit
// expression for sigma^2; repeat until the parameter change drops below
// phi_tol. Throws ConvergenceError with the series id at the iteration cap.
PhiFit learn_phi(int series, const TemporalNetwork& net, const LatentState& latent,
                 const DarTgrgParams& current, const EmConfig& config,
                 const QuadratureRule& gauss_hermite_rule);

// ---------------------------------------------------------------------------
// Full estimation
// ---------------------------------------------------------------------------

struct EstimationResult {
  ModelKind model = ModelKind::DarTgrg;
  bool directed = false;
  int n_nodes = 0;
  int n_steps = 0;
  Eigen::MatrixXd alpha;           // dar1 and dar-tgrg (zeros for tgrg)
  Eigen::MatrixXd chi;             // dar1 only
  FitnessParams fitness;           // tgrg and dar-tgrg
  LatentState latent;              // tgrg and dar-tgrg
  std::vector<double> log_likelihood_trace;  // one entry per iteration
  int iterations = 0;
  bool converged = false;
  int reference_series = -1;
  int train_split = -1;  // snapshots used for fitting when set by the CLI
  std::vector<std::string> warnings;
};

// Estimates the requested model on the full snapshot history. The latent
// models alternate filtering with the copy-weight and AR-parameter updates
// until the largest parameter change drops below em_tol; the copy-weight step
// uses the AR parameters from the previous iteration. A component failure is
// recorded in warnings and yields the last completed state with
// converged=false rather than an exception.
EstimationResult em_estimate(const TemporalNetwork& net, ModelKind kind,
                             const EmConfig& config = EmConfig{});

namespace detail {

// Exposed for tests: the mixture-model estimation loop with every copy weight
// pinned at zero, which must coincide with the pure fitness mode.
EstimationResult em_estimate_pinned_alpha(const TemporalNetwork& net, const EmConfig& config);

}  // namespace detail

}  // namespace tgrg
