// Command-line surface for the dynamic network models: simulation,
// estimation, out-of-sample forecasting, preferential-trading validation,
// link autocorrelations and Monte Carlo recovery studies.
//
// Exit codes: 0 success, 1 invalid input or arguments, 2 numerical
// non-convergence, 3 I/O failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tgrg/analytics.hpp"
#include "tgrg/errors.hpp"
#include "tgrg/forecasting.hpp"
#include "tgrg/harness.hpp"
#include "tgrg/inference.hpp"
#include "tgrg/ingest.hpp"
#include "tgrg/models.hpp"
#include "tgrg/result_io.hpp"
#include "tgrg/rng.hpp"
#include "tgrg/temporal_network.hpp"

namespace {

using tgrg::ValidationError;

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw tgrg::IoError("cannot open '" + path + "' for writing");
  return file;
}

void finish_output(std::ofstream& file, const std::string& path) {
  file.flush();
  if (!file) throw tgrg::IoError("write failure on '" + path + "'");
}

// ---------------------------------------------------------------------------
// Shared option blocks
// ---------------------------------------------------------------------------

struct ModelOption {
  std::string name = "dar-tgrg";

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", name, "model: dar1, tgrg or dar-tgrg")
        ->check(CLI::IsMember({"dar1", "tgrg", "dar-tgrg"}))
        ->capture_default_str();
  }
  tgrg::ModelKind kind() const { return tgrg::parse_model_kind(name); }
};

struct ConfigOption {
  std::string path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "estimation settings as a JSON file");
  }
  tgrg::EmConfig load() const {
    return path.empty() ? tgrg::EmConfig{} : tgrg::load_em_config(path);
  }
};

// Input network: either a snapshot file or an edge list to ingest.
struct NetworkInput {
  std::string network_path;
  std::string edges_path;
  tgrg::IngestionConfig ingestion;

  void attach(CLI::App* cmd) {
    auto* net = cmd->add_option("--network", network_path, "snapshot sequence (JSON)");
    auto* edges =
        cmd->add_option("--edges", edges_path, "transaction edge list (delimited text)");
    net->excludes(edges);
    edges->excludes(net);
    cmd->add_option("--aggregation-days", ingestion.aggregation_days,
                    "window length in days for --edges")
        ->capture_default_str();
    cmd->add_option("--activity-threshold", ingestion.activity_threshold,
                    "drop nodes active in fewer than this fraction of windows")
        ->capture_default_str();
    cmd->add_option("--date-from", ingestion.date_from, "ignore records before this date");
    cmd->add_option("--date-to", ingestion.date_to, "ignore records after this date");
  }

  // Loads or ingests; fills `labels` (and the window starts) only when
  // ingesting, since snapshot files carry bare indices.
  tgrg::TemporalNetwork load(std::vector<std::string>* labels,
                             std::vector<std::string>* windows) const {
    if (network_path.empty() == edges_path.empty())
      throw ValidationError("exactly one of --network and --edges is required");
    if (!network_path.empty()) return tgrg::load_network(network_path);
    tgrg::IngestionResult result = tgrg::ingest_file(edges_path, ingestion);
    std::cout << "ingested " << result.n_records << " records into "
              << result.network.snapshots.size() << " windows of "
              << ingestion.aggregation_days << " days starting "
              << result.window_starts.front() << "; kept " << result.labels.size()
              << " nodes, dropped " << result.dropped_labels.size() << "\n";
    if (labels) *labels = std::move(result.labels);
    if (windows) *windows = std::move(result.window_starts);
    return std::move(result.network);
  }
};

std::string label_of(const std::vector<std::string>& labels, int index) {
  return labels.empty() ? std::to_string(index) : labels[static_cast<std::size_t>(index)];
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json params_json(const tgrg::SampledParams& truth, bool directed, int n_nodes) {
  nlohmann::json doc{{"n_nodes", n_nodes}, {"directed", directed}};
  if (truth.model == tgrg::ModelKind::Dar1) {
    doc["alpha"] = matrix_json(truth.dar.alpha);
    doc["chi"] = matrix_json(truth.dar.chi);
    return doc;
  }
  doc["phi0"] = vector_json(truth.mixture.fitness.phi0);
  doc["phi1"] = vector_json(truth.mixture.fitness.phi1);
  doc["sigma"] = vector_json(truth.mixture.fitness.sigma);
  if (truth.model == tgrg::ModelKind::DarTgrg) doc["alpha"] = matrix_json(truth.mixture.alpha);
  return doc;
}

void register_simulate(CLI::App& app) {
  auto cmd = app.add_subcommand("simulate", "simulate a snapshot sequence");
  auto model = std::make_shared<ModelOption>();
  model->attach(cmd);
  struct Opts {
    bool directed = false;
    int n_nodes = 20;
    int n_steps = 100;
    std::uint64_t seed = 0;
    std::string out, params_path, params_out;
  };
  auto opts = std::make_shared<Opts>();
  auto* directed_flag = cmd->add_flag("--directed", opts->directed, "directed links");
  auto* nodes_opt =
      cmd->add_option("-N,--n-nodes", opts->n_nodes, "nodes")->capture_default_str();
  cmd->add_option("-T,--n-steps", opts->n_steps, "transitions (snapshots minus one)")
      ->capture_default_str();
  cmd->add_option("--seed", opts->seed, "random seed")->capture_default_str();
  cmd->add_option("--out", opts->out, "output snapshot file")->required();
  cmd->add_option("--params", opts->params_path,
                  "ground-truth parameter document; otherwise parameters are sampled");
  cmd->add_option("--params-out", opts->params_out, "write the parameters used");

  cmd->callback([&app, cmd, model, opts, directed_flag, nodes_opt] {
    (void)app;
    tgrg::SampledParams truth;
    truth.model = model->kind();
    bool directed = opts->directed;
    int n_nodes = opts->n_nodes;
    std::uint64_t sim_seed = tgrg::mix_seed(opts->seed, 2);

    if (!opts->params_path.empty()) {
      const std::string text = tgrg::read_text_file(opts->params_path);
      if (truth.model == tgrg::ModelKind::Dar1) {
        truth.dar = tgrg::parse_dar_params(text);
        directed = truth.dar.directed;
        n_nodes = truth.dar.n_nodes();
      } else {
        truth.mixture = truth.model == tgrg::ModelKind::DarTgrg
                            ? tgrg::parse_dar_tgrg_params(text)
                            : tgrg::DarTgrgParams{
                                  Eigen::MatrixXd(), tgrg::parse_fitness_params(text)};
        if (truth.model == tgrg::ModelKind::Tgrg)
          truth.mixture.alpha = Eigen::MatrixXd::Zero(truth.mixture.fitness.n_nodes,
                                                      truth.mixture.fitness.n_nodes);
        directed = truth.mixture.fitness.directed;
        n_nodes = truth.mixture.n_nodes();
      }
      if (directed_flag->count() > 0 && opts->directed != directed)
        throw ValidationError("--directed conflicts with the parameter document");
      if (nodes_opt->count() > 0 && opts->n_nodes != n_nodes)
        throw ValidationError("--n-nodes conflicts with the parameter document");
    } else {
      tgrg::StudyConfig sample_config;
      sample_config.model = truth.model;
      sample_config.directed = directed;
      sample_config.n_nodes = n_nodes;
      sample_config.n_steps = opts->n_steps;
      sample_config.seed = opts->seed;
      truth = tgrg::sample_params(sample_config, tgrg::mix_seed(opts->seed, 1));
    }

    tgrg::TemporalNetwork net;
    if (truth.model == tgrg::ModelKind::Dar1)
      net = tgrg::simulate_dar1(truth.dar, opts->n_steps, sim_seed);
    else
      net = tgrg::simulate_dar_tgrg(truth.mixture, opts->n_steps, sim_seed).network;

    tgrg::save_network(net, opts->out);
    if (!opts->params_out.empty()) {
      std::ofstream file = open_output(opts->params_out);
      file << params_json(truth, directed, n_nodes).dump(1) << "\n";
      finish_output(file, opts->params_out);
    }
    std::cout << "simulated " << model->name << " network: " << n_nodes << " nodes, "
              << net.n_steps() << " transitions -> " << opts->out << "\n";
  });
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

void register_estimate(CLI::App& app, int& exit_code) {
  auto cmd = app.add_subcommand("estimate", "fit a model to a snapshot sequence");
  auto model = std::make_shared<ModelOption>();
  auto config = std::make_shared<ConfigOption>();
  auto input = std::make_shared<NetworkInput>();
  model->attach(cmd);
  config->attach(cmd);
  input->attach(cmd);
  struct Opts {
    std::string out, labels_out;
    int train_split = -1;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--out", opts->out, "output fit file")->required();
  cmd->add_option("--train-split", opts->train_split,
                  "fit only the first K snapshots (for later forecasting)");
  cmd->add_option("--labels-out", opts->labels_out,
                  "write the node index-to-label map (ingested inputs)");

  cmd->callback([&exit_code, model, config, input, opts] {
    std::vector<std::string> labels;
    tgrg::TemporalNetwork net = input->load(&labels, nullptr);
    tgrg::TemporalNetwork train = net;
    if (opts->train_split >= 0) {
      if (opts->train_split < 4 ||
          opts->train_split > static_cast<int>(net.snapshots.size()))
        throw ValidationError("--train-split must be in [4, number of snapshots]");
      train.snapshots.assign(net.snapshots.begin(),
                             net.snapshots.begin() + opts->train_split);
    }

    tgrg::EstimationResult result = tgrg::em_estimate(train, model->kind(), config->load());
    if (opts->train_split >= 0) result.train_split = opts->train_split;
    tgrg::save_result(result, opts->out);

    if (!opts->labels_out.empty()) {
      std::ofstream file = open_output(opts->labels_out);
      for (std::size_t k = 0; k < labels.size(); ++k) file << k << "\t" << labels[k] << "\n";
      finish_output(file, opts->labels_out);
    }

    std::cout << "estimated " << model->name << " on " << train.n_nodes() << " nodes, "
              << train.n_steps() << " transitions: "
              << (result.converged ? "converged" : "NOT converged") << " after "
              << result.iterations << " iteration(s)";
    if (!result.log_likelihood_trace.empty())
      std::cout << ", log-likelihood " << result.log_likelihood_trace.back();
    std::cout << " -> " << opts->out << "\n";
    for (const std::string& w : result.warnings) std::cout << "warning: " << w << "\n";
    if (!result.converged) exit_code = 2;
  });
}

// ---------------------------------------------------------------------------
// forecast
// ---------------------------------------------------------------------------

void register_forecast(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "forecast", "out-of-sample one-step link forecasts from a fitted model");
  auto config = std::make_shared<ConfigOption>();
  auto input = std::make_shared<NetworkInput>();
  config->attach(cmd);
  input->attach(cmd);
  struct Opts {
    std::string fit, out;
    int split = -1;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--fit", opts->fit, "fit file from `estimate`")->required();
  cmd->add_option("--split", opts->split,
                  "first forecast origin; defaults to the fit's train split");
  cmd->add_option("--out", opts->out, "output table (t, source, target, prob, realized)")
      ->required();

  cmd->callback([config, input, opts] {
    tgrg::TemporalNetwork net = input->load(nullptr, nullptr);
    const tgrg::EstimationResult fitted = tgrg::load_result(opts->fit);
    int split = opts->split;
    if (split < 0) split = fitted.train_split;
    if (split < 1)
      throw ValidationError("no forecast origin: give --split or fit with --train-split");

    const std::vector<tgrg::ForecastObservation> sequence =
        tgrg::rolling_forecast(net, fitted, split, config->load());

    std::ofstream file = open_output(opts->out);
    file << "t\tsource\ttarget\tprob\trealized\n";
    for (const tgrg::ForecastObservation& obs : sequence) {
      const Eigen::MatrixXd& probs = obs.forecast.probs;
      for (Eigen::Index i = 0; i < probs.rows(); ++i)
        for (Eigen::Index j = net.directed ? 0 : i + 1; j < probs.cols(); ++j) {
          if (i == j) continue;
          file << obs.forecast.t_origin << "\t" << i << "\t" << j << "\t" << probs(i, j)
               << "\t" << static_cast<int>(obs.realized(i, j)) << "\n";
        }
    }
    finish_output(file, opts->out);

    const auto [scores, realized] =
        tgrg::pool_scores(tgrg::collect_link_scores(sequence, net.directed));
    std::cout << "forecast origins " << split << ".." << net.n_steps() - 1 << " -> "
              << opts->out << "\n";
    if (!scores.empty()) {
      const tgrg::RocResult roc = tgrg::roc_auc(scores, realized);
      std::cout << "pooled AUC over " << scores.size() << " forecasts: " << roc.auc << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// validate-trading
// ---------------------------------------------------------------------------

void register_validate_trading(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "validate-trading", "hypergeometric test for preferential lending relations");
  auto input = std::make_shared<NetworkInput>();
  input->attach(cmd);
  struct Opts {
    double significance = 0.05;
    std::string out;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--significance", opts->significance, "family-wise level before correction")
      ->capture_default_str();
  cmd->add_option("--out", opts->out, "validated links table (source, target, p_value)")
      ->required();

  cmd->callback([input, opts] {
    std::vector<std::string> labels;
    tgrg::TemporalNetwork net = input->load(&labels, nullptr);

    const int n = net.n_nodes();
    Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts =
        Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    for (const tgrg::AdjacencyMatrix& a : net.snapshots)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) counts(i, j) += a(i, j);

    const tgrg::TradingTestResult result =
        tgrg::preferential_trading_test(counts, opts->significance);

    std::ofstream file = open_output(opts->out);
    file << "source\ttarget\tp_value\n";
    for (const tgrg::ValidatedLink& link : result.validated)
      file << label_of(labels, link.source) << "\t" << label_of(labels, link.target) << "\t"
           << link.p_value << "\n";
    finish_output(file, opts->out);

    std::cout << "tested " << result.n_hypotheses
              << " lender-borrower pairs at corrected threshold " << result.threshold << ": "
              << result.validated.size() << " validated -> " << opts->out << "\n";
  });
}

// ---------------------------------------------------------------------------
// acf
// ---------------------------------------------------------------------------

void register_acf(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "acf", "semi-analytic link autocorrelation from fitted fitness dynamics");
  auto config = std::make_shared<ConfigOption>();
  config->attach(cmd);
  struct Opts {
    std::string fit, out;
    int source = 0, target = 0, tau_max = 20;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_option("--fit", opts->fit, "fit file from `estimate`")->required();
  cmd->add_option("--source", opts->source, "link source node")->required();
  cmd->add_option("--target", opts->target, "link target node")->required();
  cmd->add_option("--tau-max", opts->tau_max, "largest lag")->capture_default_str();
  cmd->add_option("--out", opts->out, "output table (tau, acf, two_point)")->required();

  cmd->callback([config, opts] {
    const tgrg::EstimationResult fitted = tgrg::load_result(opts->fit);
    if (fitted.model == tgrg::ModelKind::Dar1)
      throw ValidationError("acf needs a fitness-model fit (tgrg or dar-tgrg)");
    if (opts->source < 0 || opts->source >= fitted.n_nodes || opts->target < 0 ||
        opts->target >= fitted.n_nodes || opts->source == opts->target)
      throw ValidationError("invalid link endpoints");
    if (opts->tau_max < 1) throw ValidationError("--tau-max must be >= 1");

    const tgrg::EmConfig em = config->load();
    const tgrg::PgQuadrature quad =
        tgrg::PgQuadrature::make(em.pg_points_per_panel, em.pg_omega_max);
    const tgrg::ArParams fp_i =
        tgrg::series_params(fitted.fitness, fitted.fitness.out_index(opts->source));
    const tgrg::ArParams fp_j =
        tgrg::series_params(fitted.fitness, fitted.fitness.in_index(opts->target));

    std::ofstream file = open_output(opts->out);
    file << "tau\tacf\ttwo_point\n";
    for (int tau = 1; tau <= opts->tau_max; ++tau)
      file << tau << "\t" << tgrg::link_acf(fp_i, fp_j, tau, quad) << "\t"
           << tgrg::two_point_probability(fp_i, fp_j, tau, quad) << "\n";
    finish_output(file, opts->out);
    std::cout << "link (" << opts->source << "," << opts->target << ") lags 1.."
              << opts->tau_max << " -> " << opts->out << "\n";
  });
}

// ---------------------------------------------------------------------------
// mc-study
// ---------------------------------------------------------------------------

void register_mc_study(CLI::App& app) {
  auto cmd = app.add_subcommand("mc-study", "Monte Carlo parameter-recovery study");
  auto model = std::make_shared<ModelOption>();
  auto config = std::make_shared<ConfigOption>();
  model->attach(cmd);
  config->attach(cmd);
  auto study = std::make_shared<tgrg::StudyConfig>();
  struct Opts {
    std::string out, raw_out;
    double common_phi1 = 0.0;
  };
  auto opts = std::make_shared<Opts>();
  cmd->add_flag("--directed", study->directed, "directed links");
  cmd->add_option("-N,--n-nodes", study->n_nodes, "nodes")->capture_default_str();
  cmd->add_option("-T,--n-steps", study->n_steps, "transitions")->capture_default_str();
  cmd->add_option("--reps", study->n_replications, "replications")->capture_default_str();
  cmd->add_option("--seed", study->seed, "random seed")->capture_default_str();
  cmd->add_option("--workers", study->n_workers, "parallel workers")->capture_default_str();
  auto* common =
      cmd->add_option("--common-phi1", opts->common_phi1,
                      "give every series this phi1 and add a copy-only comparison fit");
  cmd->add_option("--out", opts->out, "also write the report table to this file");
  cmd->add_option("--raw-out", opts->raw_out,
                  "write pooled signed relative errors for external plotting");

  cmd->callback([model, config, study, opts, common] {
    study->model = model->kind();
    study->em = config->load();
    if (common->count() > 0) study->common_phi1 = opts->common_phi1;

    const tgrg::StudyReport report = tgrg::run_study(*study);
    const std::string table = tgrg::report_table(report);
    std::cout << table;
    for (const std::string& message : report.failure_messages)
      std::cout << "failure: " << message << "\n";

    if (!opts->out.empty()) {
      std::ofstream file = open_output(opts->out);
      file << table;
      finish_output(file, opts->out);
    }
    if (!opts->raw_out.empty()) {
      std::ofstream file = open_output(opts->raw_out);
      file << "family\terror\n";
      for (const auto& [key, stats] : report.stats)
        for (double e : stats.raw_errors) file << key << "\t" << e << "\n";
      finish_output(file, opts->raw_out);
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic network models: link copying, latent fitness, and their mixture"};
  app.require_subcommand(1);
  int exit_code = 0;

  register_simulate(app);
  register_estimate(app, exit_code);
  register_forecast(app);
  register_validate_trading(app);
  register_acf(app);
  register_mc_study(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const tgrg::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tgrg::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tgrg::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
