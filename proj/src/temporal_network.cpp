#include "tgrg/temporal_network.hpp"

#include <string>

#include "tgrg/errors.hpp"

namespace tgrg {

void validate(const TemporalNetwork& net) {
  if (net.snapshots.empty()) throw ValidationError("temporal network: no snapshots");
  const auto n = net.snapshots.front().rows();
  if (n < 2) throw ValidationError("temporal network: need at least two nodes");
  for (std::size_t t = 0; t < net.snapshots.size(); ++t) {
    const AdjacencyMatrix& a = net.snapshots[t];
    const std::string at = " at t=" + std::to_string(t);
    if (a.rows() != n || a.cols() != n)
      throw ValidationError("temporal network: snapshot shape " + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " != " + std::to_string(n) +
                            "x" + std::to_string(n) + at);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a(i, i) != 0)
        throw ValidationError("temporal network: self-link on node " + std::to_string(i) + at);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (a(i, j) > 1)
          throw ValidationError("temporal network: entry (" + std::to_string(i) + "," +
                                std::to_string(j) + ") not in {0,1}" + at);
        if (!net.directed && a(i, j) != a(j, i))
          throw ValidationError("temporal network: asymmetric undirected snapshot" + at);
      }
    }
  }
}

LinkSeries link_series(const TemporalNetwork& net, int source, int target) {
  const int n = net.n_nodes();
  if (source < 0 || source >= n || target < 0 || target >= n || source == target)
    throw ValidationError("link_series: invalid pair (" + std::to_string(source) + "," +
                          std::to_string(target) + ") for " + std::to_string(n) + " nodes");
  LinkSeries series;
  series.source = source;
  series.target = target;
  series.values.reserve(net.snapshots.size());
  for (const AdjacencyMatrix& a : net.snapshots) series.values.push_back(a(source, target));
  return series;
}

double persistence_fraction(const LinkSeries& series) {
  const std::size_t len = series.values.size();
  if (len < 2) throw ValidationError("persistence_fraction: series shorter than two snapshots");
  std::size_t repeats = 0;
  for (std::size_t t = 1; t < len; ++t)
    if (series.values[t] == series.values[t - 1]) ++repeats;
  return static_cast<double>(repeats) / static_cast<double>(len - 1);
}

DegreeSequence degree_sequence(const TemporalNetwork& net, int t) {
  if (t < 0 || t > net.n_steps())
    throw ValidationError("degree_sequence: time " + std::to_string(t) + " out of range");
  const AdjacencyMatrix& a = net.snapshots[static_cast<std::size_t>(t)];
  const int n = net.n_nodes();
  DegreeSequence deg;
  deg.out = Eigen::VectorXi::Zero(n);
  deg.in = Eigen::VectorXi::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (a(i, j)) {
        deg.out(i) += 1;
        deg.in(j) += 1;
      }
  return deg;
}

}  // namespace tgrg
