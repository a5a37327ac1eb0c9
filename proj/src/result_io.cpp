#include "tgrg/result_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tgrg/errors.hpp"

namespace tgrg {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Primitive (de)serializers
// ---------------------------------------------------------------------------

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + ": expected an array of rows");
  const std::size_t rows = j.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (!j[0].is_array()) throw IoError(what + ": expected an array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw IoError(what + ": ragged rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw IoError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw IoError(what + ": non-numeric entry");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

json fitness_to_json(const FitnessParams& fp) {
  return json{{"n_nodes", fp.n_nodes},
              {"directed", fp.directed},
              {"phi0", to_json(fp.phi0)},
              {"phi1", to_json(fp.phi1)},
              {"sigma", to_json(fp.sigma)}};
}

FitnessParams fitness_from_json(const json& j) {
  FitnessParams fp;
  fp.n_nodes = j.at("n_nodes").get<int>();
  fp.directed = j.at("directed").get<bool>();
  fp.phi0 = vector_from_json(j.at("phi0"), "fitness.phi0");
  fp.phi1 = vector_from_json(j.at("phi1"), "fitness.phi1");
  fp.sigma = vector_from_json(j.at("sigma"), "fitness.sigma");
  return fp;
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(what + ": " + e.what());
  }
}

json load_document(const std::string& path, const std::string& expected_kind) {
  const json doc = parse_text(read_text_file(path), "'" + path + "'");
  try {
    if (!doc.is_object() || doc.at("kind").get<std::string>() != expected_kind)
      throw IoError("'" + path + "': not a " + expected_kind + " document");
    const int version = doc.at("schema_version").get<int>();
    if (version != kSchemaVersion)
      throw IoError("'" + path + "': unsupported schema version " + std::to_string(version));
  } catch (const json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return doc;
}

void write_document(const json& doc, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << doc.dump(1) << "\n";
  if (!file) throw IoError("write failure on '" + path + "'");
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream out;
  out << file.rdbuf();
  if (file.bad()) throw IoError("read failure on '" + path + "'");
  return out.str();
}

// ---------------------------------------------------------------------------
// Estimation results
// ---------------------------------------------------------------------------

void save_result(const EstimationResult& result, const std::string& path) {
  json doc{{"schema_version", kSchemaVersion},
           {"kind", "estimation-result"},
           {"model", model_kind_name(result.model)},
           {"directed", result.directed},
           {"n_nodes", result.n_nodes},
           {"n_steps", result.n_steps},
           {"alpha", to_json(result.alpha)},
           {"chi", to_json(result.chi)},
           {"fitness", fitness_to_json(result.fitness)},
           {"latent",
            json{{"n_nodes", result.latent.n_nodes},
                 {"directed", result.latent.directed},
                 {"theta", to_json(result.latent.theta)}}},
           {"log_likelihood_trace", result.log_likelihood_trace},
           {"iterations", result.iterations},
           {"converged", result.converged},
           {"reference_series", result.reference_series},
           {"train_split", result.train_split},
           {"warnings", result.warnings}};
  write_document(doc, path);
}

EstimationResult load_result(const std::string& path, std::optional<ModelKind> expected) {
  const json doc = load_document(path, "estimation-result");
  EstimationResult result;
  try {
    result.model = parse_model_kind(doc.at("model").get<std::string>());
    result.directed = doc.at("directed").get<bool>();
    result.n_nodes = doc.at("n_nodes").get<int>();
    result.n_steps = doc.at("n_steps").get<int>();
    result.alpha = matrix_from_json(doc.at("alpha"), "alpha");
    result.chi = matrix_from_json(doc.at("chi"), "chi");
    result.fitness = fitness_from_json(doc.at("fitness"));
    const json& latent = doc.at("latent");
    result.latent.n_nodes = latent.at("n_nodes").get<int>();
    result.latent.directed = latent.at("directed").get<bool>();
    result.latent.theta = matrix_from_json(latent.at("theta"), "latent.theta");
    result.log_likelihood_trace = doc.at("log_likelihood_trace").get<std::vector<double>>();
    result.iterations = doc.at("iterations").get<int>();
    result.converged = doc.at("converged").get<bool>();
    result.reference_series = doc.at("reference_series").get<int>();
    result.train_split = doc.at("train_split").get<int>();
    result.warnings = doc.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  } catch (const ValidationError& e) {  // unknown model name
    throw IoError("'" + path + "': " + e.what());
  }
  if (expected && *expected != result.model)
    throw ValidationError("'" + path + "' holds a " + model_kind_name(result.model) +
                          " fit, expected " + model_kind_name(*expected));
  return result;
}

// ---------------------------------------------------------------------------
// Snapshot sequences
// ---------------------------------------------------------------------------

void save_network(const TemporalNetwork& net, const std::string& path) {
  validate(net);
  json links = json::array();
  for (std::size_t t = 0; t < net.snapshots.size(); ++t) {
    const AdjacencyMatrix& a = net.snapshots[t];
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = net.directed ? 0 : i + 1; j < a.cols(); ++j)
        if (a(i, j)) links.push_back(json::array({t, i, j}));
  }
  write_document(json{{"schema_version", kSchemaVersion},
                      {"kind", "network"},
                      {"n_nodes", net.n_nodes()},
                      {"n_steps", net.n_steps()},
                      {"directed", net.directed},
                      {"links", std::move(links)}},
                 path);
}

TemporalNetwork load_network(const std::string& path) {
  const json doc = load_document(path, "network");
  TemporalNetwork net;
  try {
    const int n = doc.at("n_nodes").get<int>();
    const int n_steps = doc.at("n_steps").get<int>();
    net.directed = doc.at("directed").get<bool>();
    if (n < 2 || n_steps < 0) throw IoError("'" + path + "': invalid dimensions");
    net.snapshots.assign(static_cast<std::size_t>(n_steps) + 1, AdjacencyMatrix::Zero(n, n));
    for (const json& link : doc.at("links")) {
      if (!link.is_array() || link.size() != 3)
        throw IoError("'" + path + "': malformed link entry");
      const int t = link[0].get<int>();
      const int i = link[1].get<int>();
      const int j = link[2].get<int>();
      if (t < 0 || t > n_steps || i < 0 || i >= n || j < 0 || j >= n || i == j)
        throw IoError("'" + path + "': link [" + std::to_string(t) + "," + std::to_string(i) +
                      "," + std::to_string(j) + "] out of range");
      net.snapshots[static_cast<std::size_t>(t)](i, j) = 1;
      if (!net.directed) net.snapshots[static_cast<std::size_t>(t)](j, i) = 1;
    }
  } catch (const json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return net;
}

// ---------------------------------------------------------------------------
// Configuration and parameter documents
// ---------------------------------------------------------------------------

EmConfig parse_em_config(const std::string& text) {
  const json doc = parse_text(text, "estimation config");
  if (!doc.is_object()) throw IoError("estimation config: expected a JSON object");
  EmConfig config;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "filter_tol") config.filter_tol = value.get<double>();
      else if (key == "filter_max_sweeps") config.filter_max_sweeps = value.get<int>();
      else if (key == "alpha_tol") config.alpha_tol = value.get<double>();
      else if (key == "phi_tol") config.phi_tol = value.get<double>();
      else if (key == "phi_max_iters") config.phi_max_iters = value.get<int>();
      else if (key == "em_tol") config.em_tol = value.get<double>();
      else if (key == "em_max_iters") config.em_max_iters = value.get<int>();
      else if (key == "theta_clamp") config.theta_clamp = value.get<double>();
      else if (key == "gh_points") config.gh_points = value.get<int>();
      else if (key == "pg_points_per_panel") config.pg_points_per_panel = value.get<int>();
      else if (key == "pg_omega_max") config.pg_omega_max = value.get<double>();
      else if (key == "n_workers") config.n_workers = value.get<int>();
      else throw ValidationError("estimation config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("estimation config: ") + e.what());
  }
  validate(config);
  return config;
}

EmConfig load_em_config(const std::string& path) { return parse_em_config(read_text_file(path)); }

namespace {

// Scalar entries broadcast: a number fills every off-diagonal link...
Eigen::MatrixXd link_matrix_from(const json& doc, const char* key, int n,
                                 const std::string& what) {
  const json& j = doc.at(key);
  if (j.is_number()) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, j.get<double>());
    m.diagonal().setZero();
    return m;
  }
  Eigen::MatrixXd m = matrix_from_json(j, what);
  if (m.rows() != n || m.cols() != n)
    throw IoError(what + ": expected an " + std::to_string(n) + "x" + std::to_string(n) +
                  " matrix");
  return m;
}

// ...and per-series vectors likewise.
Eigen::VectorXd series_vector_from(const json& doc, const char* key, int n_series,
                                   const std::string& what) {
  const json& j = doc.at(key);
  if (j.is_number()) return Eigen::VectorXd::Constant(n_series, j.get<double>());
  Eigen::VectorXd v = vector_from_json(j, what);
  if (v.size() != n_series)
    throw IoError(what + ": expected " + std::to_string(n_series) + " entries");
  return v;
}

int read_n_nodes(const json& doc) { return doc.at("n_nodes").get<int>(); }
bool read_directed(const json& doc) {
  return doc.contains("directed") && doc.at("directed").get<bool>();
}

FitnessParams fitness_params_from(const json& doc) {
  FitnessParams fp;
  fp.n_nodes = read_n_nodes(doc);
  fp.directed = read_directed(doc);
  const int n_series = fp.n_series();
  fp.phi0 = series_vector_from(doc, "phi0", n_series, "phi0");
  fp.phi1 = series_vector_from(doc, "phi1", n_series, "phi1");
  fp.sigma = series_vector_from(doc, "sigma", n_series, "sigma");
  return fp;
}

json parse_params_text(const std::string& text) {
  const json doc = parse_text(text, "parameter document");
  if (!doc.is_object()) throw IoError("parameter document: expected a JSON object");
  return doc;
}

}  // namespace

DarParams parse_dar_params(const std::string& text) {
  const json doc = parse_params_text(text);
  DarParams params;
  try {
    const int n = read_n_nodes(doc);
    params.directed = read_directed(doc);
    params.alpha = link_matrix_from(doc, "alpha", n, "alpha");
    params.chi = link_matrix_from(doc, "chi", n, "chi");
  } catch (const json::exception& e) {
    throw IoError(std::string("parameter document: ") + e.what());
  }
  validate(params);
  return params;
}

FitnessParams parse_fitness_params(const std::string& text) {
  const json doc = parse_params_text(text);
  FitnessParams params;
  try {
    params = fitness_params_from(doc);
  } catch (const json::exception& e) {
    throw IoError(std::string("parameter document: ") + e.what());
  }
  validate(params);
  return params;
}

DarTgrgParams parse_dar_tgrg_params(const std::string& text) {
  const json doc = parse_params_text(text);
  DarTgrgParams params;
  try {
    params.fitness = fitness_params_from(doc);
    params.alpha = link_matrix_from(doc, "alpha", params.fitness.n_nodes, "alpha");
  } catch (const json::exception& e) {
    throw IoError(std::string("parameter document: ") + e.what());
  }
  validate(params);
  return params;
}

}  // namespace tgrg
