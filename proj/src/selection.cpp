#include "dsvgd/selection.hpp"

#include <cmath>

#include "dsvgd/kernels.hpp"
#include "dsvgd/stein.hpp"
#include "dsvgd/svgd.hpp"

namespace dsvgd {

namespace {

constexpr double kKsdFloor = -1e-10;

}  // namespace

IndicatorVector ksd_indicators(const std::vector<ClientState>& clients,
                               const ParticleSet& global_particles,
                               const ModelSpec& model, double kde_b) {
  require(!clients.empty(), "need at least one client");
  const double stein_h = bandwidth_or_fallback(global_particles);
  IndicatorVector out;
  out.scheme = SelectionScheme::KsdBased;
  out.values.resize(static_cast<Eigen::Index>(clients.size()));
  for (std::size_t k = 0; k < clients.size(); ++k) {
    const ScoreField field =
        tilted_score(clients[k], global_particles, model, kde_b);
    const ScoreMatrix scores = eval_score_field(field, global_particles);
    const double value = ksd_vstat(global_particles, scores, stein_h);
    if (!(value >= kKsdFloor)) {
      throw numeric_error("stein discrepancy fell below the psd floor");
    }
    out.values(static_cast<Eigen::Index>(k)) = value;
  }
  return out;
}

IndicatorVector hip_indicators(const std::vector<ScoreMatrix>& score_matrices,
                               const ParticleSet& global_particles,
                               double stein_bandwidth) {
  require(!score_matrices.empty(), "need at least one score matrix");
  for (const auto& s : score_matrices) {
    require(s.rows() == global_particles.rows() &&
                s.cols() == global_particles.cols(),
            "score matrix shape must match the particle set");
  }
  const ScoreMatrix averaged = averaged_score(score_matrices);
  IndicatorVector out;
  out.scheme = SelectionScheme::HipBased;
  out.values.resize(static_cast<Eigen::Index>(score_matrices.size()));
  for (std::size_t k = 0; k < score_matrices.size(); ++k) {
    out.values(static_cast<Eigen::Index>(k)) = hip_vstat(
        global_particles, score_matrices[k], averaged, stein_bandwidth);
  }
  return out;
}

Vector selection_distribution(const Vector& indicators) {
  require(indicators.size() >= 1, "empty indicator vector");
  require(indicators.allFinite(), "non-finite indicator");
  const Vector clamped = indicators.cwiseMax(0.0);
  const double total = clamped.sum();
  if (total <= 0.0) {
    return Vector::Constant(indicators.size(),
                            1.0 / static_cast<double>(indicators.size()));
  }
  return clamped / total;
}

Eigen::Index sample_client(const Vector& probabilities, Rng& rng) {
  require(probabilities.size() >= 1, "empty probability vector");
  require((probabilities.array() >= 0.0).all(),
          "probabilities must be nonnegative");
  require(std::abs(probabilities.sum() - 1.0) <= 1e-9,
          "probabilities must sum to one");
  const double u = rng.uniform01();
  double cum = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
    if (probabilities(k) > 0.0) last_positive = k;
  }
  for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
    cum += probabilities(k);
    if (u < cum) return k;
  }
  return last_positive;
}

double jensen_gap(const Vector& indicators) {
  require(indicators.size() >= 1, "empty indicator vector");
  require(indicators.allFinite(), "non-finite indicator");
  const Vector clamped = indicators.cwiseMax(0.0);
  const Vector probs = selection_distribution(indicators);
  return clamped.dot(probs) - clamped.mean();
}

}  // namespace dsvgd
