#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>

#include "tgrg/rng.hpp"
#include "tgrg/temporal_network.hpp"

namespace tgrg {

enum class ModelKind { Dar1, Tgrg, DarTgrg };

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// AR(1) triple for a single fitness series.
struct ArParams {
  double phi0 = 0.0;
  double phi1 = 0.0;
  double sigma = 1.0;
};

// Per-series AR(1) fitness parameters. Undirected networks carry one series
// per node; directed networks two, laid out as out-fitness 0..N-1 followed by
// in-fitness N..2N-1. out_index/in_index hide that layout: for an undirected
// network both return the node itself, so link (i,j) always couples series
// out_index(i) and in_index(j).
struct FitnessParams {
  int n_nodes = 0;
  bool directed = false;
  Eigen::VectorXd phi0;
  Eigen::VectorXd phi1;
  Eigen::VectorXd sigma;

  int n_series() const { return directed ? 2 * n_nodes : n_nodes; }
  int out_index(int i) const { return i; }
  int in_index(int i) const { return directed ? n_nodes + i : i; }
};

void validate(const FitnessParams& params);
ArParams series_params(const FitnessParams& params, int series);

// Latent fitness paths on the same series layout; row t holds time t.
struct FitnessTrajectory {
  int n_nodes = 0;
  bool directed = false;
  Eigen::MatrixXd theta;  // (T+1) x n_series

  int n_series() const { return directed ? 2 * n_nodes : n_nodes; }
  int n_steps() const { return static_cast<int>(theta.rows()) - 1; }
  int out_index(int i) const { return i; }
  int in_index(int i) const { return directed ? n_nodes + i : i; }
};

// Link-copying process: each link keeps its previous state with probability
// alpha(i,j) and otherwise redraws a Bernoulli with marginal chi(i,j).
struct DarParams {
  bool directed = false;
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd chi;

  int n_nodes() const { return static_cast<int>(alpha.rows()); }
};

void validate(const DarParams& params);

// Mixture of the copy mechanism with a fitness-driven redraw: with
// probability alpha(i,j) the link repeats, otherwise it is drawn from the
// logistic link probability at the current fitnesses.
struct DarTgrgParams {
  Eigen::MatrixXd alpha;
  FitnessParams fitness;

  int n_nodes() const { return fitness.n_nodes; }
};

void validate(const DarTgrgParams& params);

// Mean and variance of the stationary law of one AR(1) series; requires
// |phi1| < 1.
std::pair<double, double> stationary_moments(const ArParams& params);

double link_probability(double theta_sum);  // numerically stable logistic

// Simulates fitness paths for all series. Row 0 is theta0 when given,
// otherwise a stationary draw (one normal per series). Each later row
// consumes one normal per series, in series order.
Eigen::MatrixXd simulate_fitness(const FitnessParams& params, int n_steps, Rng& rng,
                                 const Eigen::VectorXd* theta0 = nullptr);

TemporalNetwork simulate_dar1(const DarParams& params, int n_steps, std::uint64_t seed,
                              const AdjacencyMatrix* a0 = nullptr);

struct TgrgSample {
  TemporalNetwork network;
  FitnessTrajectory fitness;
};

// Draw order per replication: initial fitness row, initial snapshot (one
// uniform per link, row-major upper triangle or ordered pairs), then per step
// the fitness innovations followed by two uniforms per link (copy decision,
// redraw) regardless of which branch is taken. simulate_tgrg delegates to
// simulate_dar_tgrg with alpha = 0, so the two agree draw for draw.
TgrgSample simulate_dar_tgrg(const DarTgrgParams& params, int n_steps, std::uint64_t seed,
                             const AdjacencyMatrix* a0 = nullptr);
TgrgSample simulate_tgrg(const FitnessParams& params, int n_steps, std::uint64_t seed);

}  // namespace tgrg
