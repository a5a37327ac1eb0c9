#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tgrg/inference.hpp"
#include "tgrg/models.hpp"
#include "tgrg/polya_gamma.hpp"
#include "tgrg/temporal_network.hpp"

namespace tgrg {

// One-step-ahead link probabilities conditioned on information up to
// t_origin. The diagonal is zero; undirected forecasts are symmetric.
struct ForecastMatrix {
  Eigen::MatrixXd probs;
  int horizon = 1;  // only one-step-ahead forecasts are produced
  int t_origin = 0;
};

// Copy-mixture forecast: alpha * A^t + (1 - alpha) * chi per link.
ForecastMatrix forecast_dar1(const AdjacencyMatrix& a_t, const DarParams& params,
                             int t_origin = 0);

// Mixture forecast: alpha * A^t plus (1 - alpha) times the link marginal with
// both fitnesses projected one step ahead (means phi0 + phi1 * theta_hat,
// variances sigma^2). theta_t uses the shared series layout.
ForecastMatrix forecast_dar_tgrg(const AdjacencyMatrix& a_t, const Eigen::VectorXd& theta_t,
                                 const DarTgrgParams& params, const PgQuadrature& quad,
                                 int t_origin = 0);

// Pure fitness forecast: the mixture forecast with every copy weight zero
// (delegates, so the two agree bit for bit).
ForecastMatrix forecast_tgrg(const AdjacencyMatrix& a_t, const Eigen::VectorXd& theta_t,
                             const FitnessParams& params, const PgQuadrature& quad,
                             int t_origin = 0);

// A forecast paired with the snapshot it predicted.
struct ForecastObservation {
  ForecastMatrix forecast;   // prediction for time t_origin + 1
  AdjacencyMatrix realized;  // the observed snapshot at t_origin + 1
};

// Out-of-sample rolling evaluation: parameters stay frozen at `fitted` while
// the latent state is re-filtered online from t = 1; forecasts are emitted
// for every origin t in [split_t, T-1] and paired with the realized snapshot.
// split_t = T yields an empty sequence. For directed latent models the gauge
// anchor series is held at its per-snapshot static fit, exactly as during
// estimation.
std::vector<ForecastObservation> rolling_forecast(const TemporalNetwork& net,
                                                  const EstimationResult& fitted, int split_t,
                                                  const EmConfig& config = EmConfig{});

// ROC curve plus its area. Points run from (0,0) to (1,1) adding one point
// per distinct score (descending); ties therefore move diagonally and the
// trapezoid area equals the Mann-Whitney statistic with half credit for tied
// positive-negative pairs.
struct RocResult {
  std::vector<double> thresholds;  // distinct scores, descending
  std::vector<double> tpr;         // one entry per threshold, plus leading 0
  std::vector<double> fpr;
  double auc = 0.0;
};

RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// Scores and labels of one link across an evaluation window, kept per link so
// subsets by estimated copy weight can be formed.
struct LinkScoreSet {
  int source = 0;
  int target = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

// Flattens a rolling-forecast run into per-link score/label sequences. Each
// ordered pair appears once (i < j only when the forecasts are symmetric).
std::vector<LinkScoreSet> collect_link_scores(const std::vector<ForecastObservation>& sequence,
                                              bool directed);

// Concatenates every link's scores and labels into one pooled pair.
std::pair<std::vector<double>, std::vector<std::uint8_t>> pool_scores(
    const std::vector<LinkScoreSet>& links);

// AUC restricted to links whose estimated copy weight reaches a threshold;
// a threshold nobody reaches (or whose subset has single-class labels) is
// reported as undefined rather than zero.
struct ThresholdAuc {
  double threshold = 0.0;
  bool defined = false;
  double auc = 0.0;
  long n_links = 0;
};

std::vector<ThresholdAuc> auc_by_alpha_threshold(const std::vector<LinkScoreSet>& links,
                                                 const Eigen::MatrixXd& alpha_hat,
                                                 const std::vector<double>& thresholds);

}  // namespace tgrg
