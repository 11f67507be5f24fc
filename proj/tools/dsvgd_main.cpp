#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsvgd/harness.hpp"
#include "dsvgd/selection.hpp"
#include "dsvgd/stein.hpp"

namespace {

using namespace dsvgd;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string scheme;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  ExperimentConfig config = parse_config_file(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.scheme.empty()) config.scheme = parse_scheme(flags.scheme);
  if (!flags.out.empty()) config.output_dir = flags.out;
  return config;
}

std::string run_one(const ExperimentConfig& config, const std::string& stem) {
  const ExperimentResult result = run_experiment(config);
  std::filesystem::create_directories(config.output_dir);
  const std::string csv_path = config.output_dir + "/" + stem + ".csv";
  emit_csv(result.records, config.plan.clients, csv_path,
           result.error.value_or(""));
  bool have_metrics = false;
  for (const auto& r : result.records) have_metrics |= r.accuracy.has_value();
  if (have_metrics) {
    emit_plot(result.records, config.output_dir + "/" + stem + ".svg");
  }
  std::ostringstream line;
  line << stem << ": " << result.records.size() << "/" << config.rounds
       << " rounds";
  for (auto it = result.records.rbegin(); it != result.records.rend(); ++it) {
    if (it->accuracy) {
      line << ", accuracy " << *it->accuracy;
      break;
    }
  }
  line << " -> " << csv_path;
  if (result.error) line << " (aborted: " << *result.error << ")";
  std::cout << line.str() << "\n";
  if (result.error) throw numeric_error(*result.error);
  return csv_path;
}

int cmd_run(const CommonFlags& flags) {
  const ExperimentConfig config = load_with_overrides(flags);
  const std::string stem = "run_" + scheme_name(config.scheme) + "_seed" +
                           std::to_string(config.seed);
  run_one(config, stem);
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::vector<std::string>& schemes,
              int runs) {
  const ExperimentConfig base = load_with_overrides(flags);
  std::vector<std::string> wanted = schemes;
  if (!flags.scheme.empty()) wanted = {flags.scheme};
  int failures = 0;
  for (const auto& scheme : wanted) {
    for (int r = 0; r < runs; ++r) {
      ExperimentConfig config = base;
      config.scheme = parse_scheme(scheme);
      config.seed = derive_stream_seed(base.seed, static_cast<std::uint64_t>(r));
      const std::string stem = "sweep_" + scheme + "_r" + std::to_string(r);
      try {
        run_one(config, stem);
      } catch (const std::exception& e) {
        std::cerr << stem << " failed: " << e.what() << "\n";
        ++failures;
      }
    }
  }
  return failures == 0 ? 0 : 1;
}

bool report(const std::string& name, bool ok) {
  std::cout << (ok ? "ok " : "FAIL ") << name << "\n";
  return ok;
}

int cmd_check(std::uint64_t seed) {
  bool all = true;
  Rng rng(seed);

  {
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
      Vector v(5);
      for (int i = 0; i < 5; ++i) v(i) = rng.normal();
      const Vector p = selection_distribution(v);
      ok = std::abs(p.sum() - 1.0) <= 1e-12 && (p.array() >= 0.0).all();
      ok = ok && jensen_gap(v) >= -1e-12;
    }
    all &= report("selection distribution axioms and gap sign", ok);
  }

  {
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
      ParticleSet particles(6, 2);
      ScoreMatrix scores(6, 2);
      for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
          particles(i, j) = rng.normal();
          scores(i, j) = rng.normal();
        }
      }
      ok = ksd_vstat(particles, scores, 1.0) >= -1e-10;
    }
    all &= report("stein discrepancy nonnegativity", ok);
  }

  {
    ExperimentConfig config;
    config.dataset = DatasetKind::Toy;
    config.toy_mean = Vector::Zero(1);
    config.toy_variance = Vector::Ones(1);
    config.toy_client_centers = Matrix(2, 1);
    config.toy_client_centers << 1.0, -1.0;
    config.plan.clients = 2;
    config.scheme = SelectionScheme::KsdBased;
    config.rounds = 5;
    config.particles = 20;
    config.round.global_steps = 5;
    config.round.local_steps = 5;
    config.seed = seed;
    const ExperimentResult a = run_experiment(config);
    const ExperimentResult b = run_experiment(config);
    bool ok = !a.error && !b.error &&
              render_csv(a.records, 2) == render_csv(b.records, 2) &&
              a.global_particles.allFinite();
    for (const auto& r : a.records) ok = ok && r.jensen_gap >= -1e-12;
    all &= report("toy federated run: deterministic, finite, gap sign", ok);
  }

  std::cout << (all ? "all checks passed" : "CHECKS FAILED") << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle-based federated Bayesian learning testbed"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("--config", run_flags.config_path, "key=value config file")
      ->required();
  run->add_option("--seed", run_flags.seed, "override the config seed");
  run->add_option("--scheme", run_flags.scheme,
                  "override the scheme (ksd, hip, round_robin, random)");
  run->add_option("--out", run_flags.out, "output directory");

  CommonFlags sweep_flags;
  std::vector<std::string> schemes = {"ksd", "hip", "round_robin", "random"};
  int runs = 5;
  auto* sweep =
      app.add_subcommand("sweep", "run a scheme x seed grid of experiments");
  sweep->add_option("--config", sweep_flags.config_path, "key=value config file")
      ->required();
  sweep->add_option("--seed", sweep_flags.seed,
                    "base seed; per-run seeds are derived streams");
  sweep->add_option("--scheme", sweep_flags.scheme, "restrict to one scheme");
  sweep->add_option("--schemes", schemes, "schemes to sweep");
  sweep->add_option("--runs", runs, "seeds per scheme")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_flags.out, "output directory");

  std::uint64_t check_seed = 7;
  auto* check =
      app.add_subcommand("check", "fast self-test on toy problems");
  check->add_option("--seed", check_seed, "seed for the self-test");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, schemes, runs);
    if (check->parsed()) return cmd_check(check_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
