// Tests for the generative models: stationary moments, the logistic link,
// fitness-path simulation, the link-copying process, the latent-fitness
// process, and their mixture. Distributional checks run on fixed seeds with
// three-standard-error bands computed from the known sampling variance.
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "tgrg/errors.hpp"
#include "tgrg/models.hpp"
#include "tgrg/rng.hpp"
#include "tgrg/temporal_network.hpp"

using tgrg::AdjacencyMatrix;
using tgrg::ArParams;
using tgrg::DarParams;
using tgrg::DarTgrgParams;
using tgrg::FitnessParams;
using tgrg::link_probability;
using tgrg::ModelKind;
using tgrg::Rng;
using tgrg::simulate_dar1;
using tgrg::simulate_dar_tgrg;
using tgrg::simulate_fitness;
using tgrg::simulate_tgrg;
using tgrg::stationary_moments;
using tgrg::TemporalNetwork;
using tgrg::TgrgSample;
using tgrg::ValidationError;

namespace {

FitnessParams uniform_fitness(int n_nodes, bool directed, double phi0, double phi1,
                              double sigma) {
  FitnessParams params;
  params.n_nodes = n_nodes;
  params.directed = directed;
  const int n = directed ? 2 * n_nodes : n_nodes;
  params.phi0 = Eigen::VectorXd::Constant(n, phi0);
  params.phi1 = Eigen::VectorXd::Constant(n, phi1);
  params.sigma = Eigen::VectorXd::Constant(n, sigma);
  return params;
}

DarParams uniform_dar(int n_nodes, bool directed, double alpha, double chi) {
  DarParams params;
  params.directed = directed;
  params.alpha = Eigen::MatrixXd::Constant(n_nodes, n_nodes, alpha);
  params.chi = Eigen::MatrixXd::Constant(n_nodes, n_nodes, chi);
  params.alpha.diagonal().setZero();
  params.chi.diagonal().setZero();
  return params;
}

bool snapshots_equal(const TemporalNetwork& a, const TemporalNetwork& b) {
  if (a.snapshots.size() != b.snapshots.size()) return false;
  for (std::size_t t = 0; t < a.snapshots.size(); ++t)
    if (!(a.snapshots[t].array() == b.snapshots[t].array()).all()) return false;
  return true;
}

// Sample lag-1 autocorrelation of a scalar series.
double lag1_autocorrelation(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double num = 0.0, den = 0.0;
  for (int t = 0; t < n; ++t) {
    den += (x[t] - mean) * (x[t] - mean);
    if (t + 1 < n) num += (x[t] - mean) * (x[t + 1] - mean);
  }
  return num / den;
}

}  // namespace

// ============================================================================
// model kinds
// ============================================================================

TEST_CASE("model kind names round-trip") {
  CHECK(tgrg::parse_model_kind("dar1") == ModelKind::Dar1);
  CHECK(tgrg::parse_model_kind("tgrg") == ModelKind::Tgrg);
  CHECK(tgrg::parse_model_kind("dar-tgrg") == ModelKind::DarTgrg);
  for (ModelKind kind : {ModelKind::Dar1, ModelKind::Tgrg, ModelKind::DarTgrg})
    CHECK(tgrg::parse_model_kind(tgrg::model_kind_name(kind)) == kind);
  CHECK_THROWS_AS(tgrg::parse_model_kind("markov"), ValidationError);
}

// ============================================================================
// stationary moments and the logistic link
// ============================================================================

TEST_CASE("stationary moments follow the AR(1) closed form") {
  const auto [m0, v0] = stationary_moments(ArParams{0.0, 0.0, 1.0});
  CHECK(m0 == doctest::Approx(0.0));
  CHECK(v0 == doctest::Approx(1.0));

  const auto [m1, v1] = stationary_moments(ArParams{1.0, 0.5, 1.0});
  CHECK(m1 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(v1 == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("stationary moments require a stable autoregression") {
  CHECK_THROWS_AS(stationary_moments(ArParams{0.0, 1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(stationary_moments(ArParams{0.0, -1.2, 1.0}), ValidationError);
}

TEST_CASE("stationary moments match a long simulated path") {
  const ArParams params{0.3, 0.9, 0.2};
  const auto [mean, variance] = stationary_moments(params);
  CHECK(mean == doctest::Approx(3.0).epsilon(1e-14));

  const int n = 1'000'000;
  FitnessParams fp = uniform_fitness(1, false, params.phi0, params.phi1, params.sigma);
  Rng rng(2024);
  const Eigen::MatrixXd path = simulate_fitness(fp, n, rng);
  const Eigen::VectorXd x = path.col(0);
  const double sample_mean = x.mean();
  const double sample_var = (x.array() - sample_mean).square().sum() / (n - 1);

  // Effective sample size for an AR(1): n (1 - phi1) / (1 + phi1).
  const double n_eff = n * (1.0 - params.phi1) / (1.0 + params.phi1);
  const double se_mean = std::sqrt(variance / n_eff);
  const double se_var = variance * std::sqrt(2.0 / n_eff);
  CHECK(std::abs(sample_mean - mean) < 3.0 * se_mean);
  CHECK(std::abs(sample_var - variance) < 3.0 * se_var);
}

TEST_CASE("link_probability is a stable logistic") {
  CHECK(link_probability(0.0) == doctest::Approx(0.5));
  CHECK(link_probability(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  CHECK(link_probability(-1.0) == doctest::Approx(0.2689414213699951).epsilon(1e-15));
  CHECK(link_probability(1000.0) == doctest::Approx(1.0));
  CHECK(link_probability(-1000.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(link_probability(710.0)));  // would overflow a naive exp
  CHECK(link_probability(3.0) + link_probability(-3.0) == doctest::Approx(1.0).epsilon(1e-15));
}

// ============================================================================
// fitness simulation
// ============================================================================

TEST_CASE("a noiseless fitness path started at its fixed point stays there") {
  FitnessParams params = uniform_fitness(3, false, 0.6, 0.4, 1e-12);
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(3, 1.0);  // 0.6/(1-0.4)
  Rng rng(7);
  const Eigen::MatrixXd path = simulate_fitness(params, 50, rng, &theta0);
  REQUIRE(path.rows() == 51);
  REQUIRE(path.cols() == 3);
  CHECK((path.array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("the initial fitness row follows the stationary law") {
  FitnessParams params = uniform_fitness(4000, false, 1.0, 0.5, 1.0);
  Rng rng(33);
  const Eigen::MatrixXd path = simulate_fitness(params, 0, rng);
  REQUIRE(path.rows() == 1);
  const auto [mean, variance] = stationary_moments(ArParams{1.0, 0.5, 1.0});
  const double sample_mean = path.row(0).mean();
  const double sample_var =
      (path.row(0).array() - sample_mean).square().sum() / (path.cols() - 1);
  CHECK(std::abs(sample_mean - mean) < 3.0 * std::sqrt(variance / 4000.0));
  CHECK(std::abs(sample_var - variance) < 3.0 * variance * std::sqrt(2.0 / 3999.0));
}

TEST_CASE("fitness paths reproduce their autoregressive correlation") {
  const int n = 100'000;

  FitnessParams white = uniform_fitness(1, false, 0.0, 0.0, 1.0);
  Rng rng_white(5);
  const Eigen::MatrixXd path_white = simulate_fitness(white, n, rng_white);
  std::vector<double> w(path_white.col(0).data(), path_white.col(0).data() + n + 1);
  CHECK(std::abs(lag1_autocorrelation(w)) < 3.0 / std::sqrt(double(n)));

  FitnessParams ar = uniform_fitness(1, false, 0.0, 0.8, 1.0);
  Rng rng_ar(6);
  const Eigen::MatrixXd path_ar = simulate_fitness(ar, n, rng_ar);
  std::vector<double> a(path_ar.col(0).data(), path_ar.col(0).data() + n + 1);
  const double se = std::sqrt((1.0 - 0.64) / n);
  CHECK(std::abs(lag1_autocorrelation(a) - 0.8) < 3.0 * se);
}

TEST_CASE("fitness parameter validation rejects unstable or degenerate series") {
  FitnessParams params = uniform_fitness(3, false, 0.0, 0.5, 1.0);
  CHECK_NOTHROW(tgrg::validate(params));

  params.phi1[1] = 1.0;
  CHECK_THROWS_AS(tgrg::validate(params), ValidationError);
  params.phi1[1] = 0.5;

  params.sigma[2] = 0.0;
  CHECK_THROWS_AS(tgrg::validate(params), ValidationError);
  params.sigma[2] = 1.0;

  params.phi0 = Eigen::VectorXd::Zero(2);  // wrong length
  CHECK_THROWS_AS(tgrg::validate(params), ValidationError);
}

// ============================================================================
// link-copying simulation
// ============================================================================

TEST_CASE("full copy weight freezes the initial snapshot") {
  DarParams params = uniform_dar(4, false, 1.0, 0.5);
  AdjacencyMatrix a0 = AdjacencyMatrix::Zero(4, 4);
  a0(0, 1) = a0(1, 0) = 1;
  a0(2, 3) = a0(3, 2) = 1;
  const TemporalNetwork net = simulate_dar1(params, 20, 99, &a0);
  REQUIRE(net.n_steps() == 20);
  for (const auto& snap : net.snapshots) CHECK((snap.array() == a0.array()).all());
}

TEST_CASE("zero copy weight with zero marginal gives an empty network") {
  DarParams params = uniform_dar(4, false, 0.0, 0.0);
  const TemporalNetwork net = simulate_dar1(params, 10, 3);
  for (const auto& snap : net.snapshots) CHECK(snap.isZero());
}

TEST_CASE("the copy process preserves its Bernoulli marginal") {
  // The stationary occupation frequency equals chi for any copy weight; the
  // variance of the T-step average is inflated by (1+alpha)/(1-alpha).
  DarParams params = uniform_dar(2, false, 0.5, 0.3);
  const int n_steps = 100'000;
  const TemporalNetwork net = simulate_dar1(params, n_steps, 4242);
  double occupied = 0.0;
  for (const auto& snap : net.snapshots) occupied += snap(0, 1);
  const double freq = occupied / (n_steps + 1);
  const double se = std::sqrt(0.3 * 0.7 * (1.5 / 0.5) / (n_steps + 1));
  CHECK(std::abs(freq - 0.3) < 3.0 * se);
}

TEST_CASE("undirected copy simulations stay valid and symmetric") {
  DarParams params = uniform_dar(6, false, 0.4, 0.2);
  const TemporalNetwork net = simulate_dar1(params, 30, 11);
  CHECK_NOTHROW(tgrg::validate(net));
  CHECK_FALSE(net.directed);
}

TEST_CASE("copy parameter validation rejects malformed matrices") {
  DarParams params = uniform_dar(4, false, 0.3, 0.4);
  CHECK_NOTHROW(tgrg::validate(params));

  params.alpha(0, 1) = 1.5;
  CHECK_THROWS_AS(tgrg::validate(params), ValidationError);
  params.alpha(0, 1) = 0.3;

  params.chi(1, 2) = 0.9;  // breaks symmetry in undirected mode
  CHECK_THROWS_AS(tgrg::validate(params), ValidationError);
  params.directed = true;
  CHECK_NOTHROW(tgrg::validate(params));

  DarParams tiny = uniform_dar(1, false, 0.3, 0.4);
  CHECK_THROWS_AS(tgrg::validate(tiny), ValidationError);
}

// ============================================================================
// latent-fitness simulation and the mixture
// ============================================================================

TEST_CASE("zero-sum fitnesses give half link density") {
  FitnessParams params = uniform_fitness(10, false, 0.0, 0.0, 1e-9);
  const TgrgSample sample = simulate_tgrg(params, 2000, 55);
  CHECK_NOTHROW(tgrg::validate(sample.network));

  double occupied = 0.0, total = 0.0;
  for (const auto& snap : sample.network.snapshots) {
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) {
        occupied += snap(i, j);
        total += 1.0;
      }
  }
  const double freq = occupied / total;
  CHECK(std::abs(freq - 0.5) < 3.0 * std::sqrt(0.25 / total));
}

TEST_CASE("a node with very low fitness stays isolated") {
  FitnessParams params = uniform_fitness(4, false, 0.0, 0.0, 1e-9);
  params.phi0[2] = -40.0;
  const TgrgSample sample = simulate_tgrg(params, 200, 8);
  for (const auto& snap : sample.network.snapshots) {
    CHECK(snap.row(2).sum() == 0);
    CHECK(snap.col(2).sum() == 0);
  }
}

TEST_CASE("links are conditionally independent given the fitnesses") {
  // With noiseless fitnesses the link indicators are iid across time, so two
  // different pairs must be uncorrelated.
  FitnessParams params = uniform_fitness(3, false, 0.0, 0.0, 1e-9);
  const int n_steps = 20'000;
  const TgrgSample sample = simulate_tgrg(params, n_steps, 21);
  std::vector<double> ab(n_steps + 1), ac(n_steps + 1);
  for (int t = 0; t <= n_steps; ++t) {
    ab[t] = sample.network.snapshots[t](0, 1);
    ac[t] = sample.network.snapshots[t](0, 2);
  }
  double ma = 0.0, mc = 0.0;
  for (int t = 0; t <= n_steps; ++t) {
    ma += ab[t];
    mc += ac[t];
  }
  ma /= n_steps + 1;
  mc /= n_steps + 1;
  double cov = 0.0, va = 0.0, vc = 0.0;
  for (int t = 0; t <= n_steps; ++t) {
    cov += (ab[t] - ma) * (ac[t] - mc);
    va += (ab[t] - ma) * (ab[t] - ma);
    vc += (ac[t] - mc) * (ac[t] - mc);
  }
  const double corr = cov / std::sqrt(va * vc);
  CHECK(std::abs(corr) < 3.0 / std::sqrt(double(n_steps + 1)));
}

TEST_CASE("the pure latent model is the mixture with zero copy weight") {
  FitnessParams fitness = uniform_fitness(5, false, 0.2, 0.6, 0.5);
  const TgrgSample direct = simulate_tgrg(fitness, 40, 77);

  DarTgrgParams mixture;
  mixture.fitness = fitness;
  mixture.alpha = Eigen::MatrixXd::Zero(5, 5);
  const TgrgSample via_mixture = simulate_dar_tgrg(mixture, 40, 77);

  CHECK(snapshots_equal(direct.network, via_mixture.network));
  CHECK((direct.fitness.theta.array() == via_mixture.fitness.theta.array()).all());
}

TEST_CASE("full copy weight in the mixture freezes the initial snapshot") {
  DarTgrgParams params;
  params.fitness = uniform_fitness(4, false, 0.0, 0.3, 0.4);
  params.alpha = Eigen::MatrixXd::Constant(4, 4, 1.0);
  params.alpha.diagonal().setZero();
  AdjacencyMatrix a0 = AdjacencyMatrix::Zero(4, 4);
  a0(0, 3) = a0(3, 0) = 1;
  const TgrgSample sample = simulate_dar_tgrg(params, 15, 13, &a0);
  for (const auto& snap : sample.network.snapshots)
    CHECK((snap.array() == a0.array()).all());
}

TEST_CASE("directed mixtures produce valid directed networks") {
  DarTgrgParams params;
  params.fitness = uniform_fitness(5, true, 0.1, 0.4, 0.5);
  params.alpha = Eigen::MatrixXd::Constant(5, 5, 0.3);
  params.alpha.diagonal().setZero();
  const TgrgSample sample = simulate_dar_tgrg(params, 25, 19);
  CHECK(sample.network.directed);
  CHECK_NOTHROW(tgrg::validate(sample.network));
  CHECK(sample.fitness.theta.cols() == 10);  // out- and in-series
  CHECK(sample.fitness.n_steps() == 25);
}

TEST_CASE("simulations replay exactly under the same seed") {
  FitnessParams fitness = uniform_fitness(6, false, 0.0, 0.5, 0.6);
  const TgrgSample first = simulate_tgrg(fitness, 30, 1234);
  const TgrgSample second = simulate_tgrg(fitness, 30, 1234);
  CHECK(snapshots_equal(first.network, second.network));
  CHECK((first.fitness.theta.array() == second.fitness.theta.array()).all());

  const TgrgSample other = simulate_tgrg(fitness, 30, 1235);
  CHECK_FALSE(snapshots_equal(first.network, other.network));
}

TEST_CASE("the directed link law is invariant under the fitness gauge shift") {
  // Shifting every out-fitness by +c and every in-fitness by -c leaves each
  // theta_i^out + theta_j^in sum unchanged, so with matched innovations the
  // simulated networks coincide. Make the shift exact by moving phi0 with
  // phi1 = 0 so each theta is phi0 plus noise.
  const double c = 1.7;
  FitnessParams base = uniform_fitness(4, true, 0.3, 0.0, 0.5);
  FitnessParams shifted = base;
  for (int i = 0; i < 4; ++i) {
    shifted.phi0[shifted.out_index(i)] += c;
    shifted.phi0[shifted.in_index(i)] -= c;
  }
  const TgrgSample a = simulate_tgrg(base, 40, 321);
  const TgrgSample b = simulate_tgrg(shifted, 40, 321);
  CHECK(snapshots_equal(a.network, b.network));
}
