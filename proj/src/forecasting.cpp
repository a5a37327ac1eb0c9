#include "tgrg/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tgrg/errors.hpp"

namespace tgrg {

namespace {

void check_forecast_inputs(const AdjacencyMatrix& a_t, int n_nodes, const char* what) {
  if (a_t.rows() != n_nodes || a_t.cols() != n_nodes) {
    std::ostringstream msg;
    msg << what << ": snapshot is " << a_t.rows() << "x" << a_t.cols() << " but parameters say "
        << n_nodes << " nodes";
    throw ValidationError(msg.str());
  }
}

}  // namespace

ForecastMatrix forecast_dar1(const AdjacencyMatrix& a_t, const DarParams& params,
                             int t_origin) {
  validate(params);
  const int n = params.n_nodes();
  check_forecast_inputs(a_t, n, "forecast_dar1");

  ForecastMatrix out;
  out.t_origin = t_origin;
  out.probs = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double a = params.alpha(i, j);
      out.probs(i, j) = a * (a_t(i, j) ? 1.0 : 0.0) + (1.0 - a) * params.chi(i, j);
    }
  return out;
}

ForecastMatrix forecast_dar_tgrg(const AdjacencyMatrix& a_t, const Eigen::VectorXd& theta_t,
                                 const DarTgrgParams& params, const PgQuadrature& quad,
                                 int t_origin) {
  validate(params);
  const FitnessParams& fp = params.fitness;
  const int n = fp.n_nodes;
  check_forecast_inputs(a_t, n, "forecast_dar_tgrg");
  if (theta_t.size() != fp.n_series())
    throw ValidationError("forecast_dar_tgrg: theta_t length does not match the series count");

  // One-step projection of every series.
  Eigen::VectorXd mean(fp.n_series());
  for (int s = 0; s < fp.n_series(); ++s) mean(s) = fp.phi0(s) + fp.phi1(s) * theta_t(s);

  ForecastMatrix out;
  out.t_origin = t_origin;
  out.probs = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = fp.directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      const int si = fp.out_index(i);
      const int sj = fp.in_index(j);
      const GaussianPrediction pi{mean(si), fp.sigma(si) * fp.sigma(si)};
      const GaussianPrediction pj{mean(sj), fp.sigma(sj) * fp.sigma(sj)};
      const double redraw = marginal_link_integral(1, pi, pj, quad);
      const double a = params.alpha(i, j);
      const double p = a * (a_t(i, j) ? 1.0 : 0.0) + (1.0 - a) * redraw;
      out.probs(i, j) = p;
      if (!fp.directed) out.probs(j, i) = p;
    }
  return out;
}

ForecastMatrix forecast_tgrg(const AdjacencyMatrix& a_t, const Eigen::VectorXd& theta_t,
                             const FitnessParams& params, const PgQuadrature& quad,
                             int t_origin) {
  DarTgrgParams mixture;
  mixture.alpha = Eigen::MatrixXd::Zero(params.n_nodes, params.n_nodes);
  mixture.fitness = params;
  return forecast_dar_tgrg(a_t, theta_t, mixture, quad, t_origin);
}

std::vector<ForecastObservation> rolling_forecast(const TemporalNetwork& net,
                                                  const EstimationResult& fitted, int split_t,
                                                  const EmConfig& config) {
  validate(net);
  validate(config);
  const int n = net.n_nodes();
  const int t_max = net.n_steps();
  if (fitted.n_nodes != n || fitted.directed != net.directed)
    throw ValidationError("rolling_forecast: fitted result does not match the network shape");
  if (split_t < 0 || split_t > t_max)
    throw ValidationError("rolling_forecast: split_t outside [0, T]");

  std::vector<ForecastObservation> out;
  if (split_t == t_max) return out;

  if (fitted.model == ModelKind::Dar1) {
    DarParams params;
    params.directed = net.directed;
    params.alpha = fitted.alpha;
    params.chi = fitted.chi;
    for (int t = split_t; t < t_max; ++t) {
      ForecastObservation obs;
      obs.forecast = forecast_dar1(net.snapshots[static_cast<std::size_t>(t)], params, t);
      obs.realized = net.snapshots[static_cast<std::size_t>(t + 1)];
      out.push_back(std::move(obs));
    }
    return out;
  }

  DarTgrgParams params;
  params.alpha = fitted.alpha;
  params.fitness = fitted.fitness;
  validate(params);
  const int n_series = params.fitness.n_series();
  if (fitted.latent.theta.rows() < 1 || fitted.latent.theta.cols() != n_series)
    throw ValidationError("rolling_forecast: fitted result carries no initial latent state");
  const PgQuadrature quad = PgQuadrature::make(config.pg_points_per_panel, config.pg_omega_max);

  // Online pass: re-filter the whole history with the frozen parameters so
  // the state at the split reflects exactly the information available then.
  Eigen::VectorXd theta = fitted.latent.theta.row(0).transpose();
  const int pinned = fitted.reference_series;
  if (split_t == 0)
    out.push_back({forecast_dar_tgrg(net.snapshots[0], theta, params, quad, 0),
                   net.snapshots[1]});
  for (int t = 1; t < t_max; ++t) {
    double pinned_value = 0.0;
    if (pinned >= 0)
      pinned_value = ssi_snapshot(net.snapshots[static_cast<std::size_t>(t)], net.directed,
                                  config)
                         .gamma(pinned);
    try {
      theta = filter_step(net.snapshots[static_cast<std::size_t>(t)],
                          net.snapshots[static_cast<std::size_t>(t - 1)], theta, params, config,
                          pinned, pinned_value);
    } catch (const ConvergenceError& e) {
      std::ostringstream msg;
      msg << "rolling_forecast: online filtering failed at t=" << t << ": " << e.what();
      throw ConvergenceError(msg.str());
    }
    if (t >= split_t)
      out.push_back({forecast_dar_tgrg(net.snapshots[static_cast<std::size_t>(t)], theta,
                                       params, quad, t),
                     net.snapshots[static_cast<std::size_t>(t + 1)]});
  }
  return out;
}

RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  const std::size_t n = scores.size();
  if (n == 0 || labels.size() != n)
    throw ValidationError("roc_auc: empty or mismatched scores and labels");
  long n_pos = 0;
  for (auto l : labels) n_pos += l ? 1 : 0;
  const long n_neg = static_cast<long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("roc_auc: need at least one positive and one negative label");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult out;
  out.tpr.push_back(0.0);
  out.fpr.push_back(0.0);
  long tp = 0, fp = 0;
  double auc = 0.0;
  std::size_t k = 0;
  while (k < n) {
    // Consume the whole group of equal scores so ties move diagonally.
    const double score = scores[order[k]];
    long group_tp = 0, group_fp = 0;
    while (k < n && scores[order[k]] == score) {
      (labels[order[k]] ? group_tp : group_fp) += 1;
      ++k;
    }
    const double tpr_prev = static_cast<double>(tp) / n_pos;
    const double fpr_prev = static_cast<double>(fp) / n_neg;
    tp += group_tp;
    fp += group_fp;
    const double tpr_cur = static_cast<double>(tp) / n_pos;
    const double fpr_cur = static_cast<double>(fp) / n_neg;
    auc += (fpr_cur - fpr_prev) * 0.5 * (tpr_cur + tpr_prev);
    out.thresholds.push_back(score);
    out.tpr.push_back(tpr_cur);
    out.fpr.push_back(fpr_cur);
  }
  out.auc = auc;
  return out;
}

std::vector<LinkScoreSet> collect_link_scores(const std::vector<ForecastObservation>& sequence,
                                              bool directed) {
  std::vector<LinkScoreSet> out;
  if (sequence.empty()) return out;
  const int n = static_cast<int>(sequence.front().realized.rows());
  for (int i = 0; i < n; ++i)
    for (int j = directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      LinkScoreSet set;
      set.source = i;
      set.target = j;
      set.scores.reserve(sequence.size());
      set.labels.reserve(sequence.size());
      for (const ForecastObservation& obs : sequence) {
        set.scores.push_back(obs.forecast.probs(i, j));
        set.labels.push_back(obs.realized(i, j));
      }
      out.push_back(std::move(set));
    }
  return out;
}

std::pair<std::vector<double>, std::vector<std::uint8_t>> pool_scores(
    const std::vector<LinkScoreSet>& links) {
  std::pair<std::vector<double>, std::vector<std::uint8_t>> pooled;
  for (const LinkScoreSet& set : links) {
    pooled.first.insert(pooled.first.end(), set.scores.begin(), set.scores.end());
    pooled.second.insert(pooled.second.end(), set.labels.begin(), set.labels.end());
  }
  return pooled;
}

std::vector<ThresholdAuc> auc_by_alpha_threshold(const std::vector<LinkScoreSet>& links,
                                                 const Eigen::MatrixXd& alpha_hat,
                                                 const std::vector<double>& thresholds) {
  std::vector<ThresholdAuc> out;
  out.reserve(thresholds.size());
  for (const double threshold : thresholds) {
    ThresholdAuc entry;
    entry.threshold = threshold;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const LinkScoreSet& set : links) {
      if (set.source >= alpha_hat.rows() || set.target >= alpha_hat.cols())
        throw ValidationError("auc_by_alpha_threshold: link outside the alpha matrix");
      if (alpha_hat(set.source, set.target) < threshold) continue;
      ++entry.n_links;
      scores.insert(scores.end(), set.scores.begin(), set.scores.end());
      labels.insert(labels.end(), set.labels.begin(), set.labels.end());
    }
    const bool has_pos = std::find(labels.begin(), labels.end(), std::uint8_t{1}) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), std::uint8_t{0}) != labels.end();
    if (!labels.empty() && has_pos && has_neg) {
      entry.defined = true;
      entry.auc = roc_auc(scores, labels).auc;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace tgrg
