// Tests for the temporal-network container: snapshot validation, per-link
// series extraction, persistence, and degree sequences.
#include "doctest.h"

#include <cstdint>
#include <vector>

#include "tgrg/errors.hpp"
#include "tgrg/models.hpp"
#include "tgrg/temporal_network.hpp"

using tgrg::AdjacencyMatrix;
using tgrg::degree_sequence;
using tgrg::link_series;
using tgrg::LinkSeries;
using tgrg::persistence_fraction;
using tgrg::TemporalNetwork;
using tgrg::ValidationError;

namespace {

AdjacencyMatrix zeros(int n) { return AdjacencyMatrix::Zero(n, n); }

// Undirected snapshot with the given links set in both directions.
AdjacencyMatrix undirected_snapshot(int n, const std::vector<std::pair<int, int>>& links) {
  AdjacencyMatrix a = zeros(n);
  for (auto [i, j] : links) {
    a(i, j) = 1;
    a(j, i) = 1;
  }
  return a;
}

LinkSeries series_of(std::initializer_list<std::uint8_t> values) {
  LinkSeries s;
  s.source = 0;
  s.target = 1;
  s.values.assign(values);
  return s;
}

}  // namespace

// ============================================================================
// validate
// ============================================================================

TEST_CASE("a well-formed undirected network validates") {
  TemporalNetwork net;
  net.directed = false;
  net.snapshots = {undirected_snapshot(3, {{0, 1}}), undirected_snapshot(3, {{1, 2}})};
  CHECK_NOTHROW(tgrg::validate(net));
  CHECK(net.n_nodes() == 3);
  CHECK(net.n_steps() == 1);
}

TEST_CASE("validate rejects empty networks and ragged snapshots") {
  TemporalNetwork empty;
  CHECK_THROWS_AS(tgrg::validate(empty), ValidationError);

  TemporalNetwork ragged;
  ragged.snapshots = {zeros(3), zeros(4)};
  CHECK_THROWS_AS(tgrg::validate(ragged), ValidationError);
}

TEST_CASE("validate rejects self-links") {
  TemporalNetwork net;
  net.snapshots = {zeros(3)};
  net.snapshots[0](1, 1) = 1;
  CHECK_THROWS_AS(tgrg::validate(net), ValidationError);
}

TEST_CASE("validate rejects entries outside zero and one") {
  TemporalNetwork net;
  net.snapshots = {zeros(3)};
  net.snapshots[0](0, 1) = 2;
  net.snapshots[0](1, 0) = 2;
  CHECK_THROWS_AS(tgrg::validate(net), ValidationError);
}

TEST_CASE("validate enforces symmetry only in undirected mode") {
  TemporalNetwork net;
  net.snapshots = {zeros(3)};
  net.snapshots[0](0, 1) = 1;  // no reciprocal link

  net.directed = false;
  CHECK_THROWS_AS(tgrg::validate(net), ValidationError);

  net.directed = true;
  CHECK_NOTHROW(tgrg::validate(net));
}

// ============================================================================
// link_series
// ============================================================================

TEST_CASE("link_series extracts one ordered pair through time") {
  TemporalNetwork net;
  net.directed = true;
  net.snapshots = {zeros(3), zeros(3), zeros(3)};
  net.snapshots[0](0, 2) = 1;
  net.snapshots[2](0, 2) = 1;

  const LinkSeries s = link_series(net, 0, 2);
  CHECK(s.source == 0);
  CHECK(s.target == 2);
  REQUIRE(s.values.size() == 3);
  CHECK(s.values[0] == 1);
  CHECK(s.values[1] == 0);
  CHECK(s.values[2] == 1);

  // The reverse direction is a different series in directed mode.
  const LinkSeries rev = link_series(net, 2, 0);
  CHECK(rev.values[0] == 0);
  CHECK(rev.values[2] == 0);
}

TEST_CASE("link_series rejects self-pairs and out-of-range endpoints") {
  TemporalNetwork net;
  net.snapshots = {zeros(3)};
  CHECK_THROWS_AS(link_series(net, 1, 1), ValidationError);
  CHECK_THROWS_AS(link_series(net, 0, 3), ValidationError);
  CHECK_THROWS_AS(link_series(net, -1, 0), ValidationError);
}

// ============================================================================
// persistence_fraction
// ============================================================================

TEST_CASE("persistence_fraction counts repeated consecutive states") {
  CHECK(persistence_fraction(series_of({1, 1, 1, 1})) == doctest::Approx(1.0));
  CHECK(persistence_fraction(series_of({0, 1, 0, 1, 0})) == doctest::Approx(0.0));
  // Transitions 1->1 (repeat), 1->0, 0->0 (repeat), 0->1: 2 of 4.
  CHECK(persistence_fraction(series_of({1, 1, 0, 0, 1})) == doctest::Approx(0.5));
}

TEST_CASE("persistence_fraction needs at least one transition") {
  CHECK_THROWS_AS(persistence_fraction(series_of({1})), ValidationError);
  CHECK_THROWS_AS(persistence_fraction(series_of({})), ValidationError);
}

// ============================================================================
// degree_sequence
// ============================================================================

TEST_CASE("degree_sequence on an empty snapshot is all zeros") {
  TemporalNetwork net;
  net.snapshots = {zeros(4)};
  const auto deg = degree_sequence(net, 0);
  CHECK(deg.out.isZero());
  CHECK(deg.in.isZero());
}

TEST_CASE("degree_sequence splits out- and in-degree in directed mode") {
  TemporalNetwork net;
  net.directed = true;
  net.snapshots = {zeros(3)};
  net.snapshots[0](0, 1) = 1;
  net.snapshots[0](2, 1) = 1;

  const auto deg = degree_sequence(net, 0);
  CHECK(deg.out[0] == 1);
  CHECK(deg.out[1] == 0);
  CHECK(deg.out[2] == 1);
  CHECK(deg.in[0] == 0);
  CHECK(deg.in[1] == 2);
  CHECK(deg.in[2] == 0);
}

TEST_CASE("undirected degrees count each neighbour once and match both views") {
  TemporalNetwork net;
  net.snapshots = {undirected_snapshot(4, {{0, 1}, {0, 2}, {2, 3}})};
  const auto deg = degree_sequence(net, 0);
  CHECK(deg.out[0] == 2);
  CHECK(deg.out[1] == 1);
  CHECK(deg.out[2] == 2);
  CHECK(deg.out[3] == 1);
  CHECK((deg.in.array() == deg.out.array()).all());
}

TEST_CASE("total out-degree equals total in-degree on simulated snapshots") {
  tgrg::DarParams params;
  params.directed = true;
  params.alpha = Eigen::MatrixXd::Constant(6, 6, 0.3);
  params.chi = Eigen::MatrixXd::Constant(6, 6, 0.4);
  params.alpha.diagonal().setZero();
  params.chi.diagonal().setZero();
  const TemporalNetwork net = tgrg::simulate_dar1(params, 10, 911);
  for (int t = 0; t <= net.n_steps(); ++t) {
    const auto deg = degree_sequence(net, t);
    CHECK(deg.out.sum() == deg.in.sum());
  }
}

TEST_CASE("degree_sequence rejects out-of-range times") {
  TemporalNetwork net;
  net.snapshots = {zeros(3)};
  CHECK_THROWS_AS(degree_sequence(net, 1), ValidationError);
  CHECK_THROWS_AS(degree_sequence(net, -1), ValidationError);
}
