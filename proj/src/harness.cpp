#include "dsvgd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dsvgd/rng.hpp"

namespace dsvgd {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw usage_error("config key '" + key + "': cannot parse number '" +
                      value + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw usage_error("config key '" + key + "': cannot parse integer '" +
                      value + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw usage_error("config key '" + key + "': cannot parse integer '" +
                      value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw usage_error("config key '" + key + "': expected a boolean, got '" +
                    value + "'");
}

Vector to_vector(const std::string& key, const std::string& value) {
  std::vector<double> items;
  std::stringstream ss(value);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    items.push_back(to_double(key, trim(cell)));
  }
  require(!items.empty(), "config key '" + key + "' is empty");
  Vector out(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = items[i];
  }
  return out;
}

Matrix to_center_matrix(const std::string& key, const std::string& value) {
  std::vector<Vector> rows;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, '|')) {
    rows.push_back(to_vector(key, trim(part)));
  }
  require(!rows.empty(), "config key '" + key + "' is empty");
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == out.cols(),
            "config key '" + key + "': ragged rows");
    out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Per-particle log density of the observation model on every test example.
Matrix bnn_example_logliks(const BnnSpec& spec, const ParticleSet& particles,
                           const Dataset& test) {
  constexpr double kLog2Pi = 1.8378770664093453;
  const auto n = test.features.rows();
  const auto c = spec.output_dim;
  Matrix onehot = Matrix::Zero(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    onehot(i, static_cast<Eigen::Index>(test.labels(i))) = 1.0;
  }
  Matrix logliks(particles.rows(), n);
  for (Eigen::Index p = 0; p < particles.rows(); ++p) {
    const Vector theta = particles.row(p).transpose();
    const double log_gamma = theta(theta.size() - 1);
    const double gamma = std::exp(log_gamma);
    const Matrix f = bnn_forward(spec, theta, test.features);
    const Vector sq = (onehot - f).rowwise().squaredNorm();
    logliks.row(p) = (0.5 * static_cast<double>(c) * (log_gamma - kLog2Pi) -
                      0.5 * gamma * sq.array())
                         .transpose();
  }
  return logliks;
}

}  // namespace

SelectionScheme parse_scheme(const std::string& name) {
  if (name == "ksd") return SelectionScheme::KsdBased;
  if (name == "hip") return SelectionScheme::HipBased;
  if (name == "round_robin") return SelectionScheme::RoundRobin;
  if (name == "random") return SelectionScheme::RandomUniform;
  throw usage_error("unknown scheme '" + name +
                    "' (expected ksd, hip, round_robin, or random)");
}

std::string scheme_name(SelectionScheme scheme) {
  switch (scheme) {
    case SelectionScheme::KsdBased: return "ksd";
    case SelectionScheme::HipBased: return "hip";
    case SelectionScheme::RoundRobin: return "round_robin";
    case SelectionScheme::RandomUniform: return "random";
  }
  throw usage_error("invalid scheme value");
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw usage_error(origin + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    require(!key.empty(), origin + ": empty key");
    if (kv.count(key)) {
      throw usage_error(origin + ": duplicate key '" + key + "'");
    }
    kv[key] = value;
  }

  ExperimentConfig config;
  auto take = [&kv](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (const auto v = take("dataset")) {
    if (*v == "toy") config.dataset = DatasetKind::Toy;
    else if (*v == "covtype") config.dataset = DatasetKind::Covtype;
    else if (*v == "mnist") config.dataset = DatasetKind::Mnist;
    else throw usage_error("config key 'dataset': unknown value '" + *v + "'");
  }
  if (const auto v = take("covtype_path")) config.covtype_path = *v;
  if (const auto v = take("mnist_images")) config.mnist_images = *v;
  if (const auto v = take("mnist_labels")) config.mnist_labels = *v;
  if (const auto v = take("mnist_test_images")) config.mnist_test_images = *v;
  if (const auto v = take("mnist_test_labels")) config.mnist_test_labels = *v;
  if (const auto v = take("test_fraction"))
    config.test_fraction = to_double("test_fraction", *v);
  if (const auto v = take("toy_mean")) config.toy_mean = to_vector("toy_mean", *v);
  if (const auto v = take("toy_variance"))
    config.toy_variance = to_vector("toy_variance", *v);
  if (const auto v = take("toy_client_centers"))
    config.toy_client_centers = to_center_matrix("toy_client_centers", *v);
  if (const auto v = take("bnn_hidden"))
    config.bnn_hidden = to_int("bnn_hidden", *v);
  if (const auto v = take("alpha")) config.alpha = to_double("alpha", *v);
  if (const auto v = take("clients"))
    config.plan.clients = to_int("clients", *v);
  if (const auto v = take("partition_mode")) {
    if (*v == "ratio_skew") config.plan.mode = PartitionMode::RatioSkew;
    else if (*v == "classes_per_client")
      config.plan.mode = PartitionMode::ClassesPerClient;
    else
      throw usage_error("config key 'partition_mode': unknown value '" + *v +
                        "'");
  }
  if (const auto v = take("majority_fraction"))
    config.plan.majority_fraction = to_double("majority_fraction", *v);
  if (const auto v = take("classes_per_client"))
    config.plan.classes_per_client = to_int("classes_per_client", *v);
  if (const auto v = take("per_client_size"))
    config.plan.per_client_size = to_int("per_client_size", *v);
  if (const auto v = take("scheme")) config.scheme = parse_scheme(*v);
  if (const auto v = take("rounds")) config.rounds = to_int("rounds", *v);
  if (const auto v = take("particles"))
    config.particles = to_int("particles", *v);
  if (const auto v = take("global_steps"))
    config.round.global_steps = to_int("global_steps", *v);
  if (const auto v = take("local_steps"))
    config.round.local_steps = to_int("local_steps", *v);
  if (const auto v = take("kde_bandwidth"))
    config.round.kde_bandwidth = to_double("kde_bandwidth", *v);
  if (const auto v = take("global_step_size"))
    config.round.global_step_size = to_double("global_step_size", *v);
  if (const auto v = take("local_step_size"))
    config.round.local_step_size = to_double("local_step_size", *v);
  if (const auto v = take("minibatch"))
    config.round.minibatch = to_int("minibatch", *v);
  if (const auto v = take("eval_every"))
    config.eval_every = to_int("eval_every", *v);
  if (const auto v = take("seed")) config.seed = to_uint("seed", *v);
  if (const auto v = take("timing")) config.timing = to_bool("timing", *v);
  if (const auto v = take("output_dir")) config.output_dir = *v;

  if (!kv.empty()) {
    throw usage_error(origin + ": unknown config key '" + kv.begin()->first +
                      "'");
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

Metrics evaluate(const ModelSpec& model, const ParticleSet& particles,
                 const Dataset& test_set) {
  require(test_set.features.rows() >= 1, "empty test set");
  Metrics m;
  const auto n = test_set.features.rows();
  if (std::holds_alternative<BlrSpec>(model.variant)) {
    const Matrix probs = predict_ensemble(model, particles, test_set.features);
    double correct = 0.0;
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pred = probs(i, 0) >= 0.5 ? 1.0 : -1.0;
      if (pred == test_set.labels(i)) correct += 1.0;
      const double p_true =
          test_set.labels(i) > 0.0 ? probs(i, 0) : 1.0 - probs(i, 0);
      loglik += std::log(p_true);
    }
    m.accuracy = correct / static_cast<double>(n);
    m.pred_loglik = loglik / static_cast<double>(n);
    return m;
  }
  if (const auto* bnn = std::get_if<BnnSpec>(&model.variant)) {
    const Matrix outputs = predict_ensemble(model, particles, test_set.features);
    double correct = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index argmax = 0;
      outputs.row(i).maxCoeff(&argmax);
      if (argmax == static_cast<Eigen::Index>(test_set.labels(i))) {
        correct += 1.0;
      }
    }
    m.accuracy = correct / static_cast<double>(n);
    const Matrix logliks = bnn_example_logliks(*bnn, particles, test_set);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double peak = logliks.col(i).maxCoeff();
      total += peak +
               std::log((logliks.col(i).array() - peak).exp().sum()) -
               std::log(static_cast<double>(particles.rows()));
    }
    m.pred_loglik = total / static_cast<double>(n);
    return m;
  }
  throw usage_error("toy model has no predictive task");
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  require(config.rounds >= 0, "round count must be non-negative");
  require(config.particles >= 1, "need at least one particle");
  require(config.eval_every >= 1, "eval_every must be positive");
  require(config.plan.clients >= 1, "need at least one client");
  require(config.alpha > 0.0, "temperature must be positive");

  ExperimentResult result;
  std::vector<LabeledBatch> shards;
  std::optional<Dataset> test_set;

  switch (config.dataset) {
    case DatasetKind::Toy: {
      require(config.toy_mean.size() > 0,
              "toy runs need toy_mean and toy_variance");
      result.model = ModelSpec::gaussian_toy(config.toy_mean,
                                             config.toy_variance, config.alpha);
      require(config.toy_client_centers.rows() == config.plan.clients,
              "toy_client_centers must have one row per client");
      require(config.toy_client_centers.cols() == config.toy_mean.size(),
              "toy_client_centers dimension mismatch");
      for (Eigen::Index k = 0; k < config.plan.clients; ++k) {
        LabeledBatch shard;
        shard.features = config.toy_client_centers.row(k);
        shard.labels = Vector::Zero(1);
        shards.push_back(std::move(shard));
      }
      break;
    }
    case DatasetKind::Covtype: {
      require(!config.covtype_path.empty(), "covtype_path not set");
      const Dataset full = load_covtype(config.covtype_path);
      HoldoutSplit split = split_holdout(full, config.test_fraction);
      result.model =
          ModelSpec::blr(split.train.features.cols(), config.alpha);
      PartitionPlan plan = config.plan;
      plan.seed = derive_stream_seed(config.seed, 2);
      for (auto& shard : partition(split.train, plan)) {
        shards.push_back(std::move(shard.batch));
      }
      test_set = std::move(split.test);
      break;
    }
    case DatasetKind::Mnist: {
      require(!config.mnist_images.empty() && !config.mnist_labels.empty(),
              "mnist paths not set");
      const Dataset train = load_mnist(config.mnist_images, config.mnist_labels);
      const auto classes =
          static_cast<Eigen::Index>(train.labels.maxCoeff()) + 1;
      result.model = ModelSpec::bnn(train.features.cols(), classes,
                                    config.bnn_hidden, config.alpha);
      PartitionPlan plan = config.plan;
      plan.seed = derive_stream_seed(config.seed, 2);
      for (auto& shard : partition(train, plan)) {
        shards.push_back(std::move(shard.batch));
      }
      if (!config.mnist_test_images.empty()) {
        test_set =
            load_mnist(config.mnist_test_images, config.mnist_test_labels);
      }
      break;
    }
  }

  Rng init_rng(derive_stream_seed(config.seed, 0));
  Rng round_rng(derive_stream_seed(config.seed, 1));
  ServerState server;
  server.global_particles =
      sample_prior_particles(result.model, config.particles, init_rng);
  for (Eigen::Index k = 0; k < config.plan.clients; ++k) {
    ClientState client;
    client.client_id = k;
    client.shard = shards[static_cast<std::size_t>(k)];
    client.local_particles = server.global_particles;
    result.clients.push_back(std::move(client));
  }

  for (std::int64_t i = 0; i < config.rounds; ++i) {
    const auto start = std::chrono::steady_clock::now();
    RoundRecord record;
    try {
      record = federated_round(server, result.clients, config.scheme,
                               result.model, config.round, round_rng);
    } catch (const numeric_error& e) {
      result.error = e.what();
      break;
    }
    if (test_set && (i + 1) % config.eval_every == 0) {
      const Metrics m =
          evaluate(result.model, server.global_particles, *test_set);
      record.accuracy = m.accuracy;
      record.pred_loglik = m.pred_loglik;
    }
    if (config.timing) {
      const auto elapsed = std::chrono::steady_clock::now() - start;
      record.ms =
          std::chrono::duration<double, std::milli>(elapsed).count();
    }
    result.records.push_back(std::move(record));
  }
  result.global_particles = server.global_particles;
  return result;
}

std::string csv_header(Eigen::Index clients) {
  std::ostringstream out;
  out << "round,selected_client";
  for (Eigen::Index k = 0; k < clients; ++k) out << ",indicator_" << k;
  for (Eigen::Index k = 0; k < clients; ++k) out << ",prob_" << k;
  out << ",jensen_gap,payload_scalars,accuracy,pred_loglik,ms";
  return out.str();
}

std::string render_csv(const std::vector<RoundRecord>& records,
                       Eigen::Index clients, const std::string& error) {
  require(clients >= 1, "need at least one client column");
  std::ostringstream out;
  out << csv_header(clients) << "\n";
  for (const auto& r : records) {
    require(r.indicators.size() == clients && r.probabilities.size() == clients,
            "record width does not match client count");
    out << r.round << "," << r.selected_client;
    for (Eigen::Index k = 0; k < clients; ++k) {
      out << "," << format_double(r.indicators(k));
    }
    for (Eigen::Index k = 0; k < clients; ++k) {
      out << "," << format_double(r.probabilities(k));
    }
    out << "," << format_double(r.jensen_gap) << "," << r.payload_scalars;
    out << ",";
    if (r.accuracy) out << format_double(*r.accuracy);
    out << ",";
    if (r.pred_loglik) out << format_double(*r.pred_loglik);
    out << "," << format_double(r.ms) << "\n";
  }
  if (!error.empty()) out << "# aborted: " << error << "\n";
  return out.str();
}

void emit_csv(const std::vector<RoundRecord>& records, Eigen::Index clients,
              const std::string& path, const std::string& error) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << render_csv(records, clients, error);
  if (!out) throw io_error("write failed: " + path);
}

std::vector<RoundRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw io_error(path + ": empty file");
  std::vector<std::string> columns;
  {
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) columns.push_back(cell);
  }
  Eigen::Index clients = 0;
  for (const auto& c : columns) {
    if (c.rfind("indicator_", 0) == 0) ++clients;
  }
  if (clients == 0 || csv_header(clients) != header) {
    throw io_error(path + ": unrecognized header");
  }
  std::vector<RoundRecord> records;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    // The two optional metric columns may both be empty; a trailing split
    // never yields an empty final field, so pad to full width.
    while (cells.size() < columns.size()) cells.push_back("");
    if (cells.size() != columns.size()) {
      throw io_error(path + ":" + std::to_string(line_no) + ": bad row width");
    }
    RoundRecord r;
    std::size_t at = 0;
    r.round = to_int("round", cells[at++]);
    r.selected_client = to_int("selected_client", cells[at++]);
    r.indicators.resize(clients);
    for (Eigen::Index k = 0; k < clients; ++k) {
      r.indicators(k) = to_double("indicator", cells[at++]);
    }
    r.probabilities.resize(clients);
    for (Eigen::Index k = 0; k < clients; ++k) {
      r.probabilities(k) = to_double("prob", cells[at++]);
    }
    r.jensen_gap = to_double("jensen_gap", cells[at++]);
    r.payload_scalars = to_int("payload_scalars", cells[at++]);
    if (!cells[at].empty()) r.accuracy = to_double("accuracy", cells[at]);
    ++at;
    if (!cells[at].empty()) {
      r.pred_loglik = to_double("pred_loglik", cells[at]);
    }
    ++at;
    r.ms = to_double("ms", cells[at]);
    records.push_back(std::move(r));
  }
  return records;
}

void emit_plot(const std::vector<RoundRecord>& records,
               const std::string& path) {
  std::vector<std::pair<double, double>> points;
  for (const auto& r : records) {
    if (r.accuracy) points.emplace_back(static_cast<double>(r.round), *r.accuracy);
  }
  require(!points.empty(), "no metric rows to plot");
  const double width = 640.0, height = 400.0;
  const double left = 60.0, right = 20.0, top = 20.0, bottom = 50.0;
  double x_min = points.front().first, x_max = points.back().first;
  if (x_max <= x_min) x_max = x_min + 1.0;
  const auto map_x = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
  };
  const auto map_y = [&](double y) {
    return height - bottom - y * (height - top - bottom);
  };
  char buf[64];
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
         "height=\"400\" viewBox=\"0 0 640 400\">\n";
  svg << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg << "<line x1=\"60\" y1=\"380\" x2=\"620\" y2=\"380\" stroke=\"black\"/>\n";
  svg << "<line x1=\"60\" y1=\"20\" x2=\"60\" y2=\"380\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double frac = tick / 4.0;
    std::snprintf(buf, sizeof(buf), "%.2f", map_y(frac));
    svg << "<text x=\"52\" y=\"" << buf
        << "\" font-size=\"12\" text-anchor=\"end\" dominant-baseline=\"middle\">";
    std::snprintf(buf, sizeof(buf), "%.2f", frac);
    svg << buf << "</text>\n";
  }
  svg << "<text x=\"340\" y=\"396\" font-size=\"13\" text-anchor=\"middle\">"
         "round</text>\n";
  svg << "<text x=\"16\" y=\"200\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 200)\">accuracy</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" "
         "points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) svg << " ";
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f", map_x(points[i].first),
                  map_y(points[i].second));
    svg << buf;
  }
  svg << "\"/>\n</svg>\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << svg.str();
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace dsvgd
