#pragma once

#include <cstdint>
#include <functional>

#include "dsvgd/common.hpp"
#include "dsvgd/kernels.hpp"
#include "dsvgd/rng.hpp"

namespace dsvgd {

// AdaGrad with RMS decay. One instance per optimization run; the accumulator
// shape is fixed by the first gradient it sees.
struct OptimizerState {
  double master_step = 1e-1;
  double decay = 0.9;
  double fudge = 1e-6;
  Matrix accumulator;  // empty until the first step
  std::int64_t steps = 0;
};

// phi(theta_n) = (1/N) sum_j [ k(theta_j, theta_n) score_j + grad_{theta_j} k ]
Matrix svgd_direction(const ParticleSet& particles, const ScoreMatrix& scores,
                      double h_bw);

// In-place update; returns the applied step for inspection.
Matrix adagrad_step(OptimizerState& opt, ParticleSet& particles,
                    const Matrix& gradient);

// Runs `steps` SVGD iterations with the bandwidth resolved from `kernel`
// against the current particle set at every iteration. score_at(step) yields
// the score field used for that iteration, which is how minibatching plugs in.
using ScoreFieldFactory = std::function<ScoreField(std::int64_t step)>;

void run_svgd_with(ParticleSet& particles, const ScoreFieldFactory& score_at,
                   std::int64_t steps, OptimizerState& opt,
                   const KernelSpec& kernel);

void run_svgd(ParticleSet& particles, const ScoreField& score,
              std::int64_t steps, OptimizerState& opt,
              const KernelSpec& kernel);

// Evaluate a score field over every particle row.
ScoreMatrix eval_score_field(const ScoreField& score,
                             const ParticleSet& particles);

// Kernel density estimate with an isotropic Gaussian kernel of width b.
double kde_log_density(const ParticleSet& particles, const Vector& x,
                       double bandwidth);
Vector kde_score(const ParticleSet& particles, const Vector& x,
                 double bandwidth);

// Monte Carlo KL(kde_p || kde_q) using draws from the p mixture.
double kde_kl_mc(const ParticleSet& particles_p, const ParticleSet& particles_q,
                 double bandwidth, std::int64_t num_samples, Rng& rng);

}  // namespace dsvgd
