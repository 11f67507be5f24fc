#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsvgd/data.hpp"
#include "dsvgd/federation.hpp"
#include "dsvgd/models.hpp"

namespace dsvgd {

enum class DatasetKind { Toy, Covtype, Mnist };

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::Toy;
  std::string covtype_path;
  std::string mnist_images, mnist_labels;
  std::string mnist_test_images, mnist_test_labels;
  double test_fraction = 0.2;  // covtype holdout, taken from the tail

  // Toy runs: prior moments plus one pseudo-observation row per client
  // (clients x dim), in place of a dataset on disk.
  Vector toy_mean, toy_variance;
  Matrix toy_client_centers;

  Eigen::Index bnn_hidden = 100;
  double alpha = 1.0;

  PartitionPlan plan;
  SelectionScheme scheme = SelectionScheme::RoundRobin;
  std::int64_t rounds = 100;  // I
  Eigen::Index particles = 50;
  RoundConfig round;
  std::int64_t eval_every = 1;
  std::uint64_t seed = 0;
  bool timing = false;  // off keeps the ms column at 0 for reproducible bytes
  std::string output_dir = ".";
};

// Flat key=value file; '#' starts a comment. Unknown keys are rejected.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");

SelectionScheme parse_scheme(const std::string& name);
std::string scheme_name(SelectionScheme scheme);

struct ExperimentResult {
  std::vector<RoundRecord> records;
  ParticleSet global_particles;
  std::vector<ClientState> clients;
  ModelSpec model;
  // Set when a round aborted on a numerical failure; records hold the rounds
  // that completed.
  std::optional<std::string> error;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

struct Metrics {
  double accuracy = 0.0;
  double pred_loglik = 0.0;
};

Metrics evaluate(const ModelSpec& model, const ParticleSet& particles,
                 const Dataset& test_set);

// Header plus one row per record, floats at 17 significant digits. A
// non-empty `error` appends a trailing comment row.
void emit_csv(const std::vector<RoundRecord>& records, Eigen::Index clients,
              const std::string& path, const std::string& error = "");
std::string csv_header(Eigen::Index clients);
std::string render_csv(const std::vector<RoundRecord>& records,
                       Eigen::Index clients, const std::string& error = "");
std::vector<RoundRecord> parse_csv(const std::string& path);

// Accuracy-vs-round line chart, standalone SVG.
void emit_plot(const std::vector<RoundRecord>& records,
               const std::string& path);

}  // namespace dsvgd
