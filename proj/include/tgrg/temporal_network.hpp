#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tgrg {

using AdjacencyMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// A fixed node set observed as binary adjacency snapshots at times
// t = 0, ..., T. Undirected networks keep their matrices symmetric with a
// zero diagonal; self-links are disallowed in both modes.
struct TemporalNetwork {
  bool directed = false;
  std::vector<AdjacencyMatrix> snapshots;

  int n_nodes() const { return snapshots.empty() ? 0 : static_cast<int>(snapshots.front().rows()); }
  int n_steps() const { return static_cast<int>(snapshots.size()) - 1; }
};

// Throws ValidationError on ragged snapshot shapes, entries outside {0,1},
// nonzero diagonals, or asymmetric matrices in undirected mode.
void validate(const TemporalNetwork& net);

// One ordered node pair observed through time; values has length T+1.
struct LinkSeries {
  int source = 0;
  int target = 0;
  std::vector<std::uint8_t> values;
};

LinkSeries link_series(const TemporalNetwork& net, int source, int target);

// Fraction of consecutive snapshot pairs where the link state repeats.
double persistence_fraction(const LinkSeries& series);

struct DegreeSequence {
  Eigen::VectorXi out;  // undirected: the plain degree
  Eigen::VectorXi in;   // undirected: equal to out
};

DegreeSequence degree_sequence(const TemporalNetwork& net, int t);

}  // namespace tgrg
