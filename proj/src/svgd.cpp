#include "dsvgd/svgd.hpp"

#include <cmath>
#include <numbers>

namespace dsvgd {

namespace {

void check_particles(const ParticleSet& particles) {
  require(particles.rows() > 0 && particles.cols() > 0,
          "particle set must be non-empty");
  if (!particles.allFinite()) throw numeric_error("non-finite particle");
}

}  // namespace

Matrix svgd_direction(const ParticleSet& particles, const ScoreMatrix& scores,
                      double h_bw) {
  check_particles(particles);
  require(scores.rows() == particles.rows() && scores.cols() == particles.cols(),
          "scores must match particle shape");
  require(h_bw > 0.0, "bandwidth must be positive");
  if (!scores.allFinite()) throw numeric_error("non-finite score");

  const auto n = particles.rows();
  const Vector sq_norms = particles.rowwise().squaredNorm();
  Matrix sq_dist = sq_norms.replicate(1, n) + sq_norms.transpose().replicate(n, 1) -
                   2.0 * (particles * particles.transpose());
  sq_dist = sq_dist.cwiseMax(0.0);
  const Matrix gram = (-sq_dist / h_bw).array().exp().matrix();

  // Driving term: (1/N) K^T S. Repulsion: (1/N) sum_j grad_{theta_j} k(theta_j, .)
  // which for the squared-exponential kernel is (2/(h N)) (K theta - rowsum(K) theta).
  // gram is symmetric so K^T = K.
  const Matrix drive = gram * scores;
  const Vector row_sums = gram.rowwise().sum();
  const Matrix repulse =
      (2.0 / h_bw) * (row_sums.asDiagonal() * particles - gram * particles);
  Matrix phi = (drive + repulse) / static_cast<double>(n);
  if (!phi.allFinite()) throw numeric_error("non-finite svgd direction");
  return phi;
}

Matrix adagrad_step(OptimizerState& opt, ParticleSet& particles,
                    const Matrix& gradient) {
  require(gradient.rows() == particles.rows() &&
              gradient.cols() == particles.cols(),
          "gradient must match particle shape");
  if (opt.steps == 0) {
    opt.accumulator = gradient.cwiseProduct(gradient);
  } else {
    require(opt.accumulator.rows() == gradient.rows() &&
                opt.accumulator.cols() == gradient.cols(),
            "optimizer reused across mismatched shapes");
    opt.accumulator = opt.decay * opt.accumulator +
                      (1.0 - opt.decay) * gradient.cwiseProduct(gradient);
  }
  const Matrix scale =
      (opt.fudge + opt.accumulator.array().sqrt()).inverse().matrix();
  Matrix step = opt.master_step * gradient.cwiseProduct(scale);
  if (!step.allFinite()) throw numeric_error("non-finite optimizer step");
  particles += step;
  ++opt.steps;
  return step;
}

void run_svgd_with(ParticleSet& particles, const ScoreFieldFactory& score_at,
                   std::int64_t steps, OptimizerState& opt,
                   const KernelSpec& kernel) {
  check_particles(particles);
  require(steps >= 0, "steps must be non-negative");
  for (std::int64_t s = 0; s < steps; ++s) {
    const ScoreField score = score_at(s);
    const ScoreMatrix scores = eval_score_field(score, particles);
    const double h_bw = kernel.resolve_bandwidth(particles);
    const Matrix phi = svgd_direction(particles, scores, h_bw);
    adagrad_step(opt, particles, phi);
  }
}

void run_svgd(ParticleSet& particles, const ScoreField& score,
              std::int64_t steps, OptimizerState& opt,
              const KernelSpec& kernel) {
  run_svgd_with(
      particles, [&score](std::int64_t) { return score; }, steps, opt, kernel);
}

ScoreMatrix eval_score_field(const ScoreField& score,
                             const ParticleSet& particles) {
  ScoreMatrix out(particles.rows(), particles.cols());
  for (Eigen::Index i = 0; i < particles.rows(); ++i) {
    const Vector row = score(particles.row(i).transpose());
    require(row.size() == particles.cols(), "score field dimension mismatch");
    out.row(i) = row.transpose();
  }
  if (!out.allFinite()) throw numeric_error("non-finite score");
  return out;
}

double kde_log_density(const ParticleSet& particles, const Vector& x,
                       double bandwidth) {
  check_particles(particles);
  require(x.size() == particles.cols(), "query dimension mismatch");
  require(bandwidth > 0.0, "bandwidth must be positive");
  const auto n = particles.rows();
  Vector log_terms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    log_terms(i) =
        gaussian_kde_log_kernel(particles.row(i).transpose(), x, bandwidth);
  }
  const double m = log_terms.maxCoeff();
  if (!std::isfinite(m)) throw numeric_error("non-finite kde log kernel");
  const double lse = m + std::log((log_terms.array() - m).exp().sum());
  return lse - std::log(static_cast<double>(n));
}

Vector kde_score(const ParticleSet& particles, const Vector& x,
                 double bandwidth) {
  check_particles(particles);
  require(x.size() == particles.cols(), "query dimension mismatch");
  require(bandwidth > 0.0, "bandwidth must be positive");
  const auto n = particles.rows();
  Vector log_terms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    log_terms(i) =
        gaussian_kde_log_kernel(particles.row(i).transpose(), x, bandwidth);
  }
  const double m = log_terms.maxCoeff();
  if (!std::isfinite(m)) throw numeric_error("non-finite kde log kernel");
  const Vector weights_unnorm = (log_terms.array() - m).exp();
  const Vector weights = weights_unnorm / weights_unnorm.sum();
  // grad_x log sum_n w_n exp(-|x-t_n|^2/(2 b^2)) = sum_n softmax_n (t_n - x)/b^2
  Vector grad = Vector::Zero(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    grad += weights(i) * (particles.row(i).transpose() - x);
  }
  grad /= bandwidth * bandwidth;
  if (!grad.allFinite()) throw numeric_error("non-finite kde score");
  return grad;
}

double kde_kl_mc(const ParticleSet& particles_p, const ParticleSet& particles_q,
                 double bandwidth, std::int64_t num_samples, Rng& rng) {
  check_particles(particles_p);
  check_particles(particles_q);
  require(particles_p.cols() == particles_q.cols(),
          "particle sets must share a dimension");
  require(bandwidth > 0.0, "bandwidth must be positive");
  require(num_samples > 0, "need at least one sample");
  const auto d = particles_p.cols();
  double acc = 0.0;
  for (std::int64_t s = 0; s < num_samples; ++s) {
    const auto comp =
        static_cast<Eigen::Index>(rng.uniform_int(particles_p.rows()));
    Vector x = particles_p.row(comp).transpose();
    for (Eigen::Index j = 0; j < d; ++j) x(j) += bandwidth * rng.normal();
    acc += kde_log_density(particles_p, x, bandwidth) -
           kde_log_density(particles_q, x, bandwidth);
  }
  return acc / static_cast<double>(num_samples);
}

}  // namespace dsvgd
