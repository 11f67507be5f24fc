#include "dsvgd/federation.hpp"

#include <algorithm>

#include "dsvgd/kernels.hpp"
#include "dsvgd/selection.hpp"
#include "dsvgd/stein.hpp"

namespace dsvgd {

namespace {

void check_round_config(const RoundConfig& config) {
  require(config.global_steps >= 1, "need at least one global SVGD step");
  require(config.local_steps >= 0, "local step count must be non-negative");
  require(config.kde_bandwidth > 0.0, "kde bandwidth must be positive");
  require(config.global_step_size > 0.0 && config.local_step_size > 0.0,
          "step sizes must be positive");
  require(config.minibatch >= 0, "minibatch must be non-negative");
}

ScoreField tilted_score_with_batch(const ClientState& client,
                                   ParticleSet global_particles,
                                   const ModelSpec& model, double kde_b,
                                   LabeledBatch batch, double scale) {
  const bool subtract_local = client.t_initialized;
  ParticleSet local = client.local_particles;
  return [global = std::move(global_particles), local = std::move(local),
          subtract_local, model, kde_b, batch = std::move(batch),
          scale](const Vector& theta) -> Vector {
    Vector s = kde_score(global, theta, kde_b);
    if (subtract_local) s -= kde_score(local, theta, kde_b);
    s += likelihood_score(model, theta, batch, scale);
    return s;
  };
}

// `count` distinct row indices, order-stable partial Fisher-Yates.
std::vector<Eigen::Index> sample_rows(Eigen::Index total, Eigen::Index count,
                                      Rng& rng) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) {
    rows[static_cast<std::size_t>(i)] = i;
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.uniform_int(
                           static_cast<std::uint64_t>(total - i)));
    std::swap(rows[static_cast<std::size_t>(i)],
              rows[static_cast<std::size_t>(j)]);
  }
  rows.resize(static_cast<std::size_t>(count));
  return rows;
}

LabeledBatch take_rows(const LabeledBatch& shard,
                       const std::vector<Eigen::Index>& rows) {
  LabeledBatch out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      shard.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        shard.features.row(rows[i]);
    out.labels(static_cast<Eigen::Index>(i)) = shard.labels(rows[i]);
  }
  return out;
}

}  // namespace

ScoreField tilted_score(const ClientState& client,
                        const ParticleSet& global_particles,
                        const ModelSpec& model, double kde_b) {
  require(kde_b > 0.0, "kde bandwidth must be positive");
  require(client.shard.features.rows() >= 1, "client shard is empty");
  return tilted_score_with_batch(client, global_particles, model, kde_b,
                                 client.shard, 1.0);
}

ParticleSet client_global_update(ClientState& client,
                                 const ParticleSet& global_particles,
                                 const ModelSpec& model,
                                 const RoundConfig& config, OptimizerState& opt,
                                 Rng* minibatch_rng) {
  check_round_config(config);
  const auto shard_rows = client.shard.features.rows();
  const bool subsample =
      config.minibatch > 0 && config.minibatch < shard_rows;
  require(!subsample || minibatch_rng != nullptr,
          "minibatching needs a generator");

  client.snapshot_global_before = global_particles;
  ParticleSet particles = global_particles;
  const KernelSpec kernel{KernelSpec::Family::Rbf,
                          BandwidthPolicy::median_heuristic()};
  if (!subsample) {
    const ScoreField field =
        tilted_score(client, global_particles, model, config.kde_bandwidth);
    run_svgd(particles, field, config.global_steps, opt, kernel);
    return particles;
  }
  const double scale = static_cast<double>(shard_rows) /
                       static_cast<double>(config.minibatch);
  const ScoreFieldFactory factory = [&](std::int64_t) {
    const auto rows = sample_rows(shard_rows, config.minibatch, *minibatch_rng);
    return tilted_score_with_batch(client, global_particles, model,
                                   config.kde_bandwidth,
                                   take_rows(client.shard, rows), scale);
  };
  run_svgd_with(particles, factory, config.global_steps, opt, kernel);
  return particles;
}

ScoreField t_score_after_update(const ClientState& client,
                                const ParticleSet& new_global, double kde_b) {
  require(kde_b > 0.0, "kde bandwidth must be positive");
  require(client.snapshot_global_before.has_value(),
          "no broadcast snapshot: run the global update first");
  ParticleSet snapshot = *client.snapshot_global_before;
  ParticleSet local = client.local_particles;
  const bool add_local = client.t_initialized;
  return [new_g = ParticleSet(new_global), snapshot = std::move(snapshot),
          local = std::move(local), add_local, kde_b](const Vector& theta) {
    Vector s = kde_score(new_g, theta, kde_b) - kde_score(snapshot, theta, kde_b);
    if (add_local) s += kde_score(local, theta, kde_b);
    return s;
  };
}

void client_local_update(ClientState& client, const ParticleSet& new_global,
                         const RoundConfig& config, OptimizerState& opt) {
  require(client.snapshot_global_before.has_value(),
          "no broadcast snapshot: run the global update first");
  const ScoreField field =
      t_score_after_update(client, new_global, config.kde_bandwidth);
  const KernelSpec kernel{KernelSpec::Family::Rbf,
                          BandwidthPolicy::median_heuristic()};
  run_svgd(client.local_particles, field, config.local_steps, opt, kernel);
  client.t_initialized = true;
  client.snapshot_global_before.reset();
}

RoundRecord federated_round(ServerState& server,
                            std::vector<ClientState>& clients,
                            SelectionScheme scheme, const ModelSpec& model,
                            const RoundConfig& config, Rng& rng) {
  check_round_config(config);
  require(!clients.empty(), "need at least one client");
  const auto k_clients = static_cast<Eigen::Index>(clients.size());
  const auto n = server.global_particles.rows();
  const auto d = server.global_particles.cols();
  for (const auto& c : clients) {
    require(c.local_particles.rows() == n && c.local_particles.cols() == d,
            "local particle shape must match the global set");
  }

  RoundRecord record;
  record.round = server.round_index + 1;

  switch (scheme) {
    case SelectionScheme::KsdBased: {
      record.indicators = ksd_indicators(clients, server.global_particles,
                                         model, config.kde_bandwidth)
                              .values;
      record.payload_scalars = k_clients;
      break;
    }
    case SelectionScheme::HipBased: {
      std::vector<ScoreMatrix> score_matrices;
      score_matrices.reserve(clients.size());
      for (const auto& c : clients) {
        ScoreMatrix s(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
          s.row(i) = likelihood_score(
                         model, server.global_particles.row(i).transpose(),
                         c.shard)
                         .transpose();
        }
        score_matrices.push_back(std::move(s));
      }
      const double stein_h = bandwidth_or_fallback(server.global_particles);
      record.indicators =
          hip_indicators(score_matrices, server.global_particles, stein_h)
              .values;
      record.payload_scalars = k_clients * n * d;
      break;
    }
    case SelectionScheme::RoundRobin:
    case SelectionScheme::RandomUniform: {
      record.indicators = Vector::Ones(k_clients);
      record.payload_scalars = 0;
      break;
    }
  }

  record.probabilities = selection_distribution(record.indicators);
  record.jensen_gap = jensen_gap(record.indicators);
  if (scheme == SelectionScheme::RoundRobin) {
    record.selected_client =
        static_cast<Eigen::Index>(server.round_index % k_clients);
  } else {
    record.selected_client = sample_client(record.probabilities, rng);
  }

  ClientState& chosen = clients[static_cast<std::size_t>(record.selected_client)];
  OptimizerState global_opt;
  global_opt.master_step = config.global_step_size;
  const ParticleSet new_global = client_global_update(
      chosen, server.global_particles, model, config, global_opt, &rng);
  server.global_particles = new_global;
  OptimizerState local_opt;
  local_opt.master_step = config.local_step_size;
  client_local_update(chosen, new_global, config, local_opt);
  ++server.round_index;
  return record;
}

}  // namespace dsvgd
