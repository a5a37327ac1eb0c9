#pragma once

#include <optional>
#include <string>

#include "tgrg/inference.hpp"
#include "tgrg/models.hpp"
#include "tgrg/temporal_network.hpp"

namespace tgrg {

// All documents are versioned JSON; loading rejects unknown versions.
inline constexpr int kSchemaVersion = 1;

// Estimation results round-trip exactly: every parameter, latent value and
// diagnostic of load_result(save_result(x)) equals x bit for bit. Unreadable,
// unparseable or wrong-version files raise IoError; passing `expected` adds a
// model check that raises ValidationError when the file holds a different
// model's fit.
void save_result(const EstimationResult& result, const std::string& path);
EstimationResult load_result(const std::string& path,
                             std::optional<ModelKind> expected = std::nullopt);

// Snapshot sequences as sparse link lists [t, i, j] (one entry per undirected
// link). Same error conventions as results.
void save_network(const TemporalNetwork& net, const std::string& path);
TemporalNetwork load_network(const std::string& path);

// Estimation settings from a JSON object; keys match the EmConfig field
// names and missing keys keep their defaults. Unknown keys are rejected.
EmConfig parse_em_config(const std::string& text);
EmConfig load_em_config(const std::string& path);

// Ground-truth parameter documents for the simulation command. Each document
// carries n_nodes and directed; entries given as scalars broadcast to every
// link or series, otherwise full matrices / per-series arrays are expected.
//   dar1:     {"n_nodes", "directed", "alpha", "chi"}
//   tgrg:     {"n_nodes", "directed", "phi0", "phi1", "sigma"}
//   dar-tgrg: the union (alpha plus the fitness fields)
DarParams parse_dar_params(const std::string& text);
FitnessParams parse_fitness_params(const std::string& text);
DarTgrgParams parse_dar_tgrg_params(const std::string& text);

std::string read_text_file(const std::string& path);  // IoError when unreadable

}  // namespace tgrg
