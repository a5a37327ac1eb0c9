#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tgrg/inference.hpp"
#include "tgrg/models.hpp"

namespace tgrg {

// A parameter-recovery study: sample ground-truth parameters, simulate a
// network, estimate it back, and accumulate relative errors per parameter
// family.
struct StudyConfig {
  ModelKind model = ModelKind::DarTgrg;
  bool directed = false;
  int n_nodes = 50;
  int n_steps = 100;
  int n_replications = 20;
  std::uint64_t seed = 0;
  // When set, every series gets this phi1 instead of a uniform draw; used by
  // the copy-weight bias experiment.
  std::optional<double> common_phi1;
  int n_workers = 1;
  EmConfig em;
};

void validate(const StudyConfig& config);

// Ground truth for one replication. The copy-only model fills `dar`; the
// latent models fill `mixture` (with zero copy weights for the pure fitness
// model).
struct SampledParams {
  ModelKind model = ModelKind::DarTgrg;
  DarParams dar;
  DarTgrgParams mixture;
};

// Draws parameters from the study's sampling recipe: copy weights and
// marginals uniform on [0,1); phi1 uniform on (-1,1) unless common_phi1 is
// set; sigma uniform on [0,1); phi0 standard normal. Fitness series are drawn
// first (phi1, sigma, phi0 per series), then per-pair copy weights.
SampledParams sample_params(const StudyConfig& config, std::uint64_t seed);

// Mean absolute relative error. Entries with |truth| < 1e-6 are excluded
// (relative error is undefined there) and counted.
struct MareResult {
  double value = 0.0;
  long n_used = 0;
  long n_excluded = 0;
};

MareResult mare(const std::vector<double>& estimates, const std::vector<double>& truths);

// Accumulated recovery errors of one (estimator, family) cell.
struct FamilyStats {
  double pooled_mare = 0.0;         // over all replications and entries
  long n_used = 0;
  long n_excluded = 0;
  std::vector<double> per_replication;  // MARE per replication, in order
  // Signed relative errors (estimate - truth)/|truth| of static parameters,
  // pooled across replications for density plots; empty for trajectories.
  std::vector<double> raw_errors;
};

struct StudyReport {
  StudyConfig config;
  // Keyed "estimator/family", e.g. "em/phi0", "ssi/theta", "ml/alpha"; the
  // bias experiment adds "dar1/alpha" for the copy-only fit on mixture data.
  std::map<std::string, FamilyStats> stats;
  std::vector<int> failed_replications;
  std::vector<std::string> failure_messages;
  long n_nonconverged = 0;  // replications whose EM hit the iteration cap
};

// Runs the full study. Replications are independent, seeded from the master
// seed, and merged in index order, so the report is identical for any worker
// count.
StudyReport run_study(const StudyConfig& config);

// Fixed-precision text rendering of a report (deterministic).
std::string report_table(const StudyReport& report);

// One-sided paired comparison of two equal-length per-replication metrics:
// tests whether mean(first - second) < 0, i.e. `first` is strictly better.
// significant_95 uses the t distribution at 95% one-sided.
struct PairedTTest {
  double mean_diff = 0.0;
  double t_stat = 0.0;
  int dof = 0;
  bool significant_95 = false;
};

PairedTTest paired_one_sided(const std::vector<double>& first,
                             const std::vector<double>& second);

}  // namespace tgrg
