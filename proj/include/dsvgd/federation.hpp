#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dsvgd/common.hpp"
#include "dsvgd/models.hpp"
#include "dsvgd/rng.hpp"
#include "dsvgd/svgd.hpp"

namespace dsvgd {

enum class SelectionScheme { KsdBased, HipBased, RoundRobin, RandomUniform };

struct ServerState {
  ParticleSet global_particles;
  std::int64_t round_index = 0;  // completed rounds
};

struct ClientState {
  Eigen::Index client_id = 0;
  LabeledBatch shard;
  ParticleSet local_particles;
  // False until the first selection; the approximate likelihood starts as the
  // constant function, whose score is identically zero.
  bool t_initialized = false;
  // Global particles as broadcast at the start of this client's update.
  std::optional<ParticleSet> snapshot_global_before;
};

struct RoundConfig {
  std::int64_t global_steps = 10;  // SVGD iterations on downloaded particles
  std::int64_t local_steps = 10;   // SVGD iterations on local particles
  double kde_bandwidth = 0.55;
  double global_step_size = 0.05;
  double local_step_size = 0.05;
  Eigen::Index minibatch = 0;  // 0 = full shard
};

struct RoundRecord {
  std::int64_t round = 0;  // 1-based
  Eigen::Index selected_client = 0;
  Vector indicators;
  Vector probabilities;
  double jensen_gap = 0.0;
  std::int64_t payload_scalars = 0;
  std::optional<double> accuracy;
  std::optional<double> pred_loglik;
  double ms = 0.0;
};

// Score of the client's tilted target: global KDE score, minus the local KDE
// score once t_k exists, plus the tempered likelihood score. The prior is not
// added separately; it entered the global particles at initialization.
ScoreField tilted_score(const ClientState& client,
                        const ParticleSet& global_particles,
                        const ModelSpec& model, double kde_b);

// Runs `config.global_steps` SVGD iterations on a copy of the broadcast
// particles against the tilted target, stores the broadcast set as the
// client's snapshot, and returns the updated set. With config.minibatch > 0
// the likelihood term is re-subsampled each step (scaled to stay unbiased)
// using `minibatch_rng`, which must then be non-null.
ParticleSet client_global_update(ClientState& client,
                                 const ParticleSet& global_particles,
                                 const ModelSpec& model,
                                 const RoundConfig& config, OptimizerState& opt,
                                 Rng* minibatch_rng = nullptr);

// Score of the client's next approximate likelihood: the multiplicative
// update (new global / snapshot) applied to the current t_k.
ScoreField t_score_after_update(const ClientState& client,
                                const ParticleSet& new_global, double kde_b);

// Moves the local particles toward the updated approximate likelihood, marks
// t_k initialized, and clears the snapshot.
void client_local_update(ClientState& client, const ParticleSet& new_global,
                         const RoundConfig& config, OptimizerState& opt);

// One selection round: indicators, distribution, one sampled client, its
// global and local updates. Mutates the server and exactly one client.
RoundRecord federated_round(ServerState& server,
                            std::vector<ClientState>& clients,
                            SelectionScheme scheme, const ModelSpec& model,
                            const RoundConfig& config, Rng& rng);

}  // namespace dsvgd
