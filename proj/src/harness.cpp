#include "tgrg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tgrg/errors.hpp"
#include "tgrg/parallel.hpp"
#include "tgrg/rng.hpp"

namespace tgrg {

void validate(const StudyConfig& config) {
  if (config.n_nodes < 2) throw ValidationError("study config: n_nodes must be >= 2");
  if (config.n_steps < 3) throw ValidationError("study config: n_steps must be >= 3");
  if (config.n_replications < 1)
    throw ValidationError("study config: n_replications must be >= 1");
  if (config.n_workers < 1) throw ValidationError("study config: n_workers must be >= 1");
  if (config.common_phi1 && !(std::abs(*config.common_phi1) < 1.0))
    throw ValidationError("study config: common_phi1 must satisfy |phi1| < 1");
  validate(config.em);
}

namespace {

constexpr double kTruthFloor = 1e-6;  // below this a relative error is undefined

std::vector<std::pair<int, int>> ordered_pairs(int n, bool directed) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = directed ? 0 : i + 1; j < n; ++j)
      if (i != j) pairs.emplace_back(i, j);
  return pairs;
}

FitnessParams sample_fitness(const StudyConfig& config, Rng& rng) {
  FitnessParams fp;
  fp.n_nodes = config.n_nodes;
  fp.directed = config.directed;
  const int n_series = fp.n_series();
  fp.phi0.resize(n_series);
  fp.phi1.resize(n_series);
  fp.sigma.resize(n_series);
  for (int s = 0; s < n_series; ++s) {
    const double phi1 = config.common_phi1 ? *config.common_phi1 : 2.0 * rng.uniform() - 1.0;
    fp.phi1(s) = std::min(std::max(phi1, -1.0 + 1e-6), 1.0 - 1e-6);
    fp.sigma(s) = std::max(rng.uniform(), 1e-12);
    fp.phi0(s) = rng.normal();
  }
  return fp;
}

Eigen::MatrixXd sample_pair_matrix(int n, bool directed, Rng& rng) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : ordered_pairs(n, directed)) {
    const double v = rng.uniform();
    m(i, j) = v;
    if (!directed) m(j, i) = v;
  }
  return m;
}

}  // namespace

SampledParams sample_params(const StudyConfig& config, std::uint64_t seed) {
  validate(config);
  Rng rng(seed);
  SampledParams out;
  out.model = config.model;
  const int n = config.n_nodes;

  if (config.model == ModelKind::Dar1) {
    out.dar.directed = config.directed;
    out.dar.alpha = Eigen::MatrixXd::Zero(n, n);
    out.dar.chi = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : ordered_pairs(n, config.directed)) {
      const double a = rng.uniform();
      const double x = rng.uniform();
      out.dar.alpha(i, j) = a;
      out.dar.chi(i, j) = x;
      if (!config.directed) {
        out.dar.alpha(j, i) = a;
        out.dar.chi(j, i) = x;
      }
    }
    return out;
  }

  out.mixture.fitness = sample_fitness(config, rng);
  out.mixture.alpha = config.model == ModelKind::DarTgrg
                          ? sample_pair_matrix(n, config.directed, rng)
                          : Eigen::MatrixXd::Zero(n, n);
  return out;
}

MareResult mare(const std::vector<double>& estimates, const std::vector<double>& truths) {
  if (estimates.empty() || estimates.size() != truths.size())
    throw ValidationError("mare: empty or mismatched inputs");
  MareResult out;
  double sum = 0.0;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    if (std::abs(truths[k]) < kTruthFloor) {
      ++out.n_excluded;
      continue;
    }
    sum += std::abs(estimates[k] - truths[k]) / std::abs(truths[k]);
    ++out.n_used;
  }
  out.value = out.n_used > 0 ? sum / out.n_used : 0.0;
  return out;
}

namespace {

// Per-replication contribution of one (estimator, family) cell.
struct RepCell {
  double sum_abs = 0.0;  // sum of included absolute relative errors
  long n_used = 0;
  long n_excluded = 0;
  double rep_mare = 0.0;
  std::vector<double> raw;  // signed relative errors (static families only)
};

struct RepOutcome {
  bool failed = false;
  std::string message;
  bool nonconverged = false;
  std::map<std::string, RepCell> cells;
};

void accumulate_cell(RepOutcome& outcome, const std::string& key,
                     const std::vector<double>& estimates, const std::vector<double>& truths,
                     bool keep_raw) {
  RepCell cell;
  double sum = 0.0;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    if (std::abs(truths[k]) < kTruthFloor) {
      ++cell.n_excluded;
      continue;
    }
    const double rel = (estimates[k] - truths[k]) / std::abs(truths[k]);
    sum += std::abs(rel);
    ++cell.n_used;
    if (keep_raw) cell.raw.push_back(rel);
  }
  cell.sum_abs = sum;
  cell.rep_mare = cell.n_used > 0 ? sum / cell.n_used : 0.0;
  outcome.cells[key] = std::move(cell);
}

std::vector<double> matrix_pairs(const Eigen::MatrixXd& m,
                                 const std::vector<std::pair<int, int>>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.push_back(m(i, j));
  return out;
}

std::vector<double> flatten(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::MatrixXd>(out.data(), m.rows(), m.cols()) = m;
  return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  double upper = values[n / 2];
  if (n % 2 == 1) return upper;
  std::nth_element(values.begin(), values.begin() + n / 2 - 1, values.end());
  return 0.5 * (values[n / 2 - 1] + upper);
}

// Directed estimates are identified only up to a constant moved between the
// out and in blocks. Before scoring, shift the estimate by the median
// residual so the comparison ignores that unidentifiable direction; phi0
// moves with it to stay consistent with the shifted trajectories.
void align_directed_gauge(const Eigen::MatrixXd& truth_theta, Eigen::MatrixXd& est_theta,
                          Eigen::VectorXd& phi0, const Eigen::VectorXd& phi1, int n_nodes) {
  std::vector<double> residuals;
  residuals.reserve(static_cast<std::size_t>(truth_theta.size()));
  for (Eigen::Index t = 0; t < truth_theta.rows(); ++t)
    for (Eigen::Index s = 0; s < truth_theta.cols(); ++s) {
      const double r = truth_theta(t, s) - est_theta(t, s);
      residuals.push_back(s < n_nodes ? r : -r);
    }
  const double c = median(std::move(residuals));
  est_theta.leftCols(n_nodes).array() += c;
  est_theta.rightCols(est_theta.cols() - n_nodes).array() -= c;
  for (Eigen::Index s = 0; s < phi0.size(); ++s) {
    const double shift = c * (1.0 - phi1(s));
    phi0(s) += s < n_nodes ? shift : -shift;
  }
}

void score_fitness_estimator(RepOutcome& outcome, const std::string& estimator,
                             const FitnessTrajectory& truth_latent,
                             const FitnessParams& truth_fitness,
                             const FitnessTrajectory& est_latent,
                             const FitnessParams& est_fitness, bool directed, int n_nodes) {
  Eigen::MatrixXd est_theta = est_latent.theta;
  Eigen::VectorXd est_phi0 = est_fitness.phi0;
  if (directed)
    align_directed_gauge(truth_latent.theta, est_theta, est_phi0, est_fitness.phi1, n_nodes);
  accumulate_cell(outcome, estimator + "/theta", flatten(est_theta),
                  flatten(truth_latent.theta), false);
  accumulate_cell(outcome, estimator + "/phi0", to_vector(est_phi0),
                  to_vector(truth_fitness.phi0), true);
  accumulate_cell(outcome, estimator + "/phi1", to_vector(est_fitness.phi1),
                  to_vector(truth_fitness.phi1), true);
  accumulate_cell(outcome, estimator + "/sigma", to_vector(est_fitness.sigma),
                  to_vector(truth_fitness.sigma), true);
}

RepOutcome run_replication(const StudyConfig& config, int rep, const PgQuadrature& quad) {
  RepOutcome outcome;
  const std::uint64_t rep_seed = mix_seed(config.seed, static_cast<std::uint64_t>(rep));
  const SampledParams truth = sample_params(config, mix_seed(rep_seed, 1));
  const std::uint64_t sim_seed = mix_seed(rep_seed, 2);
  const auto pairs = ordered_pairs(config.n_nodes, config.directed);

  if (config.model == ModelKind::Dar1) {
    const TemporalNetwork net = simulate_dar1(truth.dar, config.n_steps, sim_seed);
    const EstimationResult est = em_estimate(net, ModelKind::Dar1, config.em);
    accumulate_cell(outcome, "ml/alpha", matrix_pairs(est.alpha, pairs),
                    matrix_pairs(truth.dar.alpha, pairs), true);
    accumulate_cell(outcome, "ml/chi", matrix_pairs(est.chi, pairs),
                    matrix_pairs(truth.dar.chi, pairs), true);
    return outcome;
  }

  const TgrgSample sample = config.model == ModelKind::Tgrg
                                ? simulate_tgrg(truth.mixture.fitness, config.n_steps, sim_seed)
                                : simulate_dar_tgrg(truth.mixture, config.n_steps, sim_seed);

  const EstimationResult em = em_estimate(sample.network, config.model, config.em);
  if (!em.converged) outcome.nonconverged = true;
  const SsiResult ssi = ssi_initialize(sample.network, config.model, config.em, quad);

  score_fitness_estimator(outcome, "em", sample.fitness, truth.mixture.fitness, em.latent,
                          em.fitness, config.directed, config.n_nodes);
  score_fitness_estimator(outcome, "ssi", sample.fitness, truth.mixture.fitness, ssi.latent,
                          ssi.fitness, config.directed, config.n_nodes);

  if (config.model == ModelKind::DarTgrg) {
    accumulate_cell(outcome, "em/alpha", matrix_pairs(em.alpha, pairs),
                    matrix_pairs(truth.mixture.alpha, pairs), true);
    accumulate_cell(outcome, "ssi/alpha", matrix_pairs(ssi.alpha, pairs),
                    matrix_pairs(truth.mixture.alpha, pairs), true);
    if (config.common_phi1) {
      // The bias experiment: fit the copy-only model to mixture data and
      // compare its copy-weight recovery with the full model's.
      const EstimationResult d1 = em_estimate(sample.network, ModelKind::Dar1, config.em);
      accumulate_cell(outcome, "dar1/alpha", matrix_pairs(d1.alpha, pairs),
                      matrix_pairs(truth.mixture.alpha, pairs), true);
    }
  }
  return outcome;
}

}  // namespace

StudyReport run_study(const StudyConfig& config) {
  validate(config);
  const PgQuadrature quad =
      PgQuadrature::make(config.em.pg_points_per_panel, config.em.pg_omega_max);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.n_replications));
  parallel_for(config.n_replications, config.n_workers, [&](int rep) {
    try {
      outcomes[static_cast<std::size_t>(rep)] = run_replication(config, rep, quad);
    } catch (const std::exception& e) {
      outcomes[static_cast<std::size_t>(rep)].failed = true;
      outcomes[static_cast<std::size_t>(rep)].message = e.what();
    }
  });

  StudyReport report;
  report.config = config;
  for (int rep = 0; rep < config.n_replications; ++rep) {
    RepOutcome& outcome = outcomes[static_cast<std::size_t>(rep)];
    if (outcome.failed) {
      report.failed_replications.push_back(rep);
      report.failure_messages.push_back("replication " + std::to_string(rep) + ": " +
                                        outcome.message);
      continue;
    }
    if (outcome.nonconverged) ++report.n_nonconverged;
    for (auto& [key, cell] : outcome.cells) {
      FamilyStats& stats = report.stats[key];
      stats.pooled_mare += cell.sum_abs;  // numerator for now
      stats.n_used += cell.n_used;
      stats.n_excluded += cell.n_excluded;
      stats.per_replication.push_back(cell.rep_mare);
      stats.raw_errors.insert(stats.raw_errors.end(), cell.raw.begin(), cell.raw.end());
    }
  }
  for (auto& [key, stats] : report.stats)
    stats.pooled_mare = stats.n_used > 0 ? stats.pooled_mare / stats.n_used : 0.0;
  return report;
}

std::string report_table(const StudyReport& report) {
  std::ostringstream out;
  out << "model=" << model_kind_name(report.config.model)
      << " directed=" << (report.config.directed ? 1 : 0)
      << " n_nodes=" << report.config.n_nodes << " n_steps=" << report.config.n_steps
      << " replications=" << report.config.n_replications << " seed=" << report.config.seed;
  if (report.config.common_phi1)
    out << " common_phi1=" << std::fixed << std::setprecision(4)
        << *report.config.common_phi1;
  out << "\n";
  out << std::left << std::setw(24) << "estimator/family" << std::right << std::setw(10)
      << "mare" << std::setw(10) << "n_used" << std::setw(12) << "n_excluded" << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& [key, stats] : report.stats)
    out << std::left << std::setw(24) << key << std::right << std::setw(10)
        << stats.pooled_mare << std::setw(10) << stats.n_used << std::setw(12)
        << stats.n_excluded << "\n";
  out << "failed_replications=" << report.failed_replications.size()
      << " nonconverged=" << report.n_nonconverged << "\n";
  return out.str();
}

PairedTTest paired_one_sided(const std::vector<double>& first,
                             const std::vector<double>& second) {
  const std::size_t n = first.size();
  if (n < 2 || second.size() != n)
    throw ValidationError("paired_one_sided: need two samples of equal length >= 2");

  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += first[k] - second[k];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = first[k] - second[k] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  PairedTTest out;
  out.mean_diff = mean;
  out.dof = static_cast<int>(n) - 1;
  if (sd < 1e-15) {
    out.t_stat = mean < 0.0 ? -std::numeric_limits<double>::infinity()
                            : (mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  } else {
    out.t_stat = mean / (sd / std::sqrt(static_cast<double>(n)));
  }

  // One-sided 95% t quantiles for dof 1..30; beyond that a conservative 1.70.
  static const double kT95[31] = {0.0,   6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895,
                                  1.860, 1.833, 1.812, 1.796, 1.782, 1.771, 1.761, 1.753,
                                  1.746, 1.740, 1.734, 1.729, 1.725, 1.721, 1.717, 1.714,
                                  1.711, 1.708, 1.706, 1.703, 1.701, 1.699, 1.697};
  const double crit = out.dof <= 30 ? kT95[out.dof] : 1.70;
  out.significant_95 = out.t_stat < -crit;
  return out;
}

}  // namespace tgrg
