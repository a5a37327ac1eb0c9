#include "tgrg/models.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "tgrg/errors.hpp"

namespace tgrg {

namespace {

void check_probability_matrix(const Eigen::MatrixXd& m, bool directed, const char* label) {
  const Eigen::Index n = m.rows();
  if (n < 2 || m.cols() != n)
    throw ValidationError(std::string(label) + ": expected a square matrix over >= 2 nodes");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = m(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError(std::string(label) + ": entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") = " + std::to_string(v) +
                              " outside [0,1]");
      if (!directed && m(i, j) != m(j, i))
        throw ValidationError(std::string(label) + ": undirected matrix not symmetric at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
    }
}

// Draws one snapshot via per-link Bernoulli marginals; used for the initial
// condition. One uniform per link, row-major over ordered pairs (directed) or
// the upper triangle (undirected).
AdjacencyMatrix draw_initial_snapshot(int n, bool directed, Rng& rng,
                                      const std::function<double(int, int)>& marginal) {
  AdjacencyMatrix a = AdjacencyMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      const std::uint8_t v = rng.bernoulli(marginal(i, j)) ? 1 : 0;
      a(i, j) = v;
      if (!directed) a(j, i) = v;
    }
  return a;
}

void check_initial_snapshot(const AdjacencyMatrix& a0, int n, bool directed) {
  TemporalNetwork probe;
  probe.directed = directed;
  probe.snapshots = {a0, a0};
  if (a0.rows() != n || a0.cols() != n)
    throw ValidationError("initial snapshot: wrong shape");
  validate(probe);
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dar1: return "dar1";
    case ModelKind::Tgrg: return "tgrg";
    case ModelKind::DarTgrg: return "dar-tgrg";
  }
  throw ValidationError("model_kind_name: unknown model kind");
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "dar1") return ModelKind::Dar1;
  if (name == "tgrg") return ModelKind::Tgrg;
  if (name == "dar-tgrg") return ModelKind::DarTgrg;
  throw ValidationError("unknown model '" + name + "' (expected dar1, tgrg or dar-tgrg)");
}

void validate(const FitnessParams& params) {
  const int s = params.n_series();
  if (params.n_nodes < 2) throw ValidationError("fitness params: need at least two nodes");
  if (params.phi0.size() != s || params.phi1.size() != s || params.sigma.size() != s)
    throw ValidationError("fitness params: vectors must hold one entry per series");
  for (int k = 0; k < s; ++k) {
    if (!(std::abs(params.phi1(k)) < 1.0))
      throw ValidationError("fitness params: |phi1| >= 1 on series " + std::to_string(k));
    if (!(params.sigma(k) > 0.0))
      throw ValidationError("fitness params: sigma <= 0 on series " + std::to_string(k));
  }
}

ArParams series_params(const FitnessParams& params, int series) {
  if (series < 0 || series >= params.n_series())
    throw ValidationError("series_params: series index out of range");
  return ArParams{params.phi0(series), params.phi1(series), params.sigma(series)};
}

void validate(const DarParams& params) {
  check_probability_matrix(params.alpha, params.directed, "dar params alpha");
  check_probability_matrix(params.chi, params.directed, "dar params chi");
  if (params.chi.rows() != params.alpha.rows())
    throw ValidationError("dar params: alpha and chi sizes differ");
}

void validate(const DarTgrgParams& params) {
  validate(params.fitness);
  check_probability_matrix(params.alpha, params.fitness.directed, "mixture params alpha");
  if (static_cast<int>(params.alpha.rows()) != params.fitness.n_nodes)
    throw ValidationError("mixture params: alpha size does not match the node count");
}

std::pair<double, double> stationary_moments(const ArParams& params) {
  if (!(std::abs(params.phi1) < 1.0))
    throw ValidationError("stationary_moments: |phi1| must be < 1");
  const double mean = params.phi0 / (1.0 - params.phi1);
  const double var = params.sigma * params.sigma / (1.0 - params.phi1 * params.phi1);
  return {mean, var};
}

double link_probability(double theta_sum) {
  if (theta_sum >= 0.0) return 1.0 / (1.0 + std::exp(-theta_sum));
  const double e = std::exp(theta_sum);
  return e / (1.0 + e);
}

Eigen::MatrixXd simulate_fitness(const FitnessParams& params, int n_steps, Rng& rng,
                                 const Eigen::VectorXd* theta0) {
  validate(params);
  if (n_steps < 1) throw ValidationError("simulate_fitness: need at least one step");
  const int s = params.n_series();
  Eigen::MatrixXd theta(n_steps + 1, s);
  if (theta0) {
    if (theta0->size() != s)
      throw ValidationError("simulate_fitness: theta0 has the wrong length");
    theta.row(0) = theta0->transpose();
  } else {
    for (int k = 0; k < s; ++k) {
      const auto [mean, var] = stationary_moments(series_params(params, k));
      theta(0, k) = mean + std::sqrt(var) * rng.normal();
    }
  }
  for (int t = 1; t <= n_steps; ++t)
    for (int k = 0; k < s; ++k)
      theta(t, k) = params.phi0(k) + params.phi1(k) * theta(t - 1, k) +
                    params.sigma(k) * rng.normal();
  return theta;
}

TemporalNetwork simulate_dar1(const DarParams& params, int n_steps, std::uint64_t seed,
                              const AdjacencyMatrix* a0) {
  validate(params);
  if (n_steps < 1) throw ValidationError("simulate_dar1: need at least one step");
  const int n = params.n_nodes();
  Rng rng(seed);

  TemporalNetwork net;
  net.directed = params.directed;
  net.snapshots.reserve(n_steps + 1);
  if (a0) {
    check_initial_snapshot(*a0, n, params.directed);
    net.snapshots.push_back(*a0);
  } else {
    net.snapshots.push_back(draw_initial_snapshot(
        n, params.directed, rng, [&](int i, int j) { return params.chi(i, j); }));
  }

  for (int t = 1; t <= n_steps; ++t) {
    const AdjacencyMatrix& prev = net.snapshots.back();
    AdjacencyMatrix a = AdjacencyMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = params.directed ? 0 : i + 1; j < n; ++j) {
        if (i == j) continue;
        const bool copy = rng.bernoulli(params.alpha(i, j));
        const bool redraw = rng.bernoulli(params.chi(i, j));
        const std::uint8_t v = copy ? prev(i, j) : (redraw ? 1 : 0);
        a(i, j) = v;
        if (!params.directed) a(j, i) = v;
      }
    net.snapshots.push_back(std::move(a));
  }
  return net;
}

TgrgSample simulate_dar_tgrg(const DarTgrgParams& params, int n_steps, std::uint64_t seed,
                             const AdjacencyMatrix* a0) {
  validate(params);
  if (n_steps < 1) throw ValidationError("simulate_dar_tgrg: need at least one step");
  const int n = params.n_nodes();
  const bool directed = params.fitness.directed;
  Rng rng(seed);

  TgrgSample sample;
  sample.fitness.n_nodes = n;
  sample.fitness.directed = directed;
  sample.fitness.theta.resize(n_steps + 1, params.fitness.n_series());

  // Initial fitness row (stationary draw), then the initial snapshot from the
  // implied logistic marginals.
  for (int k = 0; k < params.fitness.n_series(); ++k) {
    const auto [mean, var] = stationary_moments(series_params(params.fitness, k));
    sample.fitness.theta(0, k) = mean + std::sqrt(var) * rng.normal();
  }
  sample.network.directed = directed;
  sample.network.snapshots.reserve(n_steps + 1);
  if (a0) {
    check_initial_snapshot(*a0, n, directed);
    sample.network.snapshots.push_back(*a0);
  } else {
    sample.network.snapshots.push_back(draw_initial_snapshot(n, directed, rng, [&](int i, int j) {
      return link_probability(sample.fitness.theta(0, params.fitness.out_index(i)) +
                              sample.fitness.theta(0, params.fitness.in_index(j)));
    }));
  }

  for (int t = 1; t <= n_steps; ++t) {
    for (int k = 0; k < params.fitness.n_series(); ++k)
      sample.fitness.theta(t, k) = params.fitness.phi0(k) +
                                   params.fitness.phi1(k) * sample.fitness.theta(t - 1, k) +
                                   params.fitness.sigma(k) * rng.normal();
    const AdjacencyMatrix& prev = sample.network.snapshots.back();
    AdjacencyMatrix a = AdjacencyMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = directed ? 0 : i + 1; j < n; ++j) {
        if (i == j) continue;
        // Two uniforms per link on every path, so alpha = 0 replays the same
        // stream as the pure fitness model.
        const bool copy = rng.bernoulli(params.alpha(i, j));
        const double p = link_probability(sample.fitness.theta(t, params.fitness.out_index(i)) +
                                          sample.fitness.theta(t, params.fitness.in_index(j)));
        const bool redraw = rng.bernoulli(p);
        const std::uint8_t v = copy ? prev(i, j) : (redraw ? 1 : 0);
        a(i, j) = v;
        if (!directed) a(j, i) = v;
      }
    sample.network.snapshots.push_back(std::move(a));
  }
  return sample;
}

TgrgSample simulate_tgrg(const FitnessParams& params, int n_steps, std::uint64_t seed) {
  DarTgrgParams mixture;
  mixture.fitness = params;
  mixture.alpha = Eigen::MatrixXd::Zero(params.n_nodes, params.n_nodes);
  return simulate_dar_tgrg(mixture, n_steps, seed);
}

}  // namespace tgrg
