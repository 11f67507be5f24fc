#pragma once

#include <vector>

#include "dsvgd/common.hpp"
#include "dsvgd/federation.hpp"
#include "dsvgd/rng.hpp"

namespace dsvgd {

struct IndicatorVector {
  Vector values;
  SelectionScheme scheme = SelectionScheme::KsdBased;
};

// Per-client discrepancy between the broadcast posterior and each tilted
// target: the Stein V-statistic of the tilted score over the global
// particles, with the median-heuristic Stein bandwidth.
IndicatorVector ksd_indicators(const std::vector<ClientState>& clients,
                               const ParticleSet& global_particles,
                               const ModelSpec& model, double kde_b);

// Inner products between each client's likelihood-score update direction and
// the direction of the averaged likelihood.
IndicatorVector hip_indicators(const std::vector<ScoreMatrix>& score_matrices,
                               const ParticleSet& global_particles,
                               double stein_bandwidth);

// Clamp at zero and normalize; uniform when everything clamps away.
Vector selection_distribution(const Vector& indicators);

Eigen::Index sample_client(const Vector& probabilities, Rng& rng);

// How much indicator-proportional selection improves on uniform selection:
// sum_k v_k P_k - mean_k v_k over the clamped indicators. Nonnegative.
double jensen_gap(const Vector& indicators);

}  // namespace dsvgd
