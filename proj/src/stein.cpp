#include "dsvgd/stein.hpp"

#include "dsvgd/kernels.hpp"

#include <cmath>

namespace dsvgd {

double h_pair(const Vector& s_i, const Vector& s_j, const Vector& theta_i,
              const Vector& theta_j, double h_bw) {
  require(s_i.size() == s_j.size() && s_i.size() == theta_i.size() &&
              theta_i.size() == theta_j.size(),
          "h_pair arguments must share a dimension");
  require(s_i.allFinite() && s_j.allFinite(), "h_pair scores must be finite");

  const double k = eval_kernel(theta_i, theta_j, h_bw);
  const Vector grad_i = grad_x_kernel(theta_i, theta_j, h_bw);
  // grad wrt the second argument is the negative of grad wrt the first.
  const Vector grad_j = -grad_i;
  const double trace = trace_grad_xy_kernel(theta_i, theta_j, h_bw);

  const double value =
      s_i.dot(s_j) * k + s_i.dot(grad_j) + grad_i.dot(s_j) + trace;
  if (!std::isfinite(value)) throw numeric_error("h_pair produced a nonfinite value");
  return value;
}

double hip_vstat(const ParticleSet& particles, const ScoreMatrix& scores_1,
                 const ScoreMatrix& scores_2, double h_bw) {
  const auto n = particles.rows();
  const auto d = particles.cols();
  require(n >= 1, "hip_vstat needs at least one particle");
  require(scores_1.rows() == n && scores_2.rows() == n,
          "score row count must match particle count");
  require(scores_1.cols() == d && scores_2.cols() == d,
          "score dimension must match particle dimension");
  require(particles.allFinite() && scores_1.allFinite() && scores_2.allFinite(),
          "hip_vstat inputs must be finite");
  require(h_bw > 0.0 && std::isfinite(h_bw), "bandwidth must be positive");

  // Vectorized form of the pairwise sum; see h_pair for the scalar version.
  const Matrix sq_dist =
      (particles.rowwise().squaredNorm().replicate(1, n) +
       particles.rowwise().squaredNorm().transpose().replicate(n, 1) -
       2.0 * particles * particles.transpose())
          .cwiseMax(0.0);
  const Matrix gram = (-sq_dist / h_bw).array().exp().matrix();

  // term1: sum_ij K_ij (s1_i . s2_j)
  const double term1 = gram.cwiseProduct(scores_1 * scores_2.transpose()).sum();

  // term2: sum_ij s1_i . grad_j k = (2/h) sum_ij K_ij (s1_i.t_i - s1_i.t_j)
  const Vector s1_dot_own = (scores_1.cwiseProduct(particles)).rowwise().sum();
  const Matrix s1_dot_theta = scores_1 * particles.transpose();
  const double term2 =
      (2.0 / h_bw) *
      gram.cwiseProduct(s1_dot_own.replicate(1, n) - s1_dot_theta).sum();

  // term3: sum_ij grad_i k . s2_j = (2/h) sum_ij K_ij (t_j.s2_j - t_i.s2_j)
  const Vector s2_dot_own = (scores_2.cwiseProduct(particles)).rowwise().sum();
  const Matrix theta_dot_s2 = particles * scores_2.transpose();
  const double term3 =
      (2.0 / h_bw) *
      gram.cwiseProduct(s2_dot_own.transpose().replicate(n, 1) - theta_dot_s2)
          .sum();

  // term4: sum_ij K_ij (2d/h - 4 ||t_i-t_j||^2 / h^2)
  const double dd = static_cast<double>(d);
  const double term4 =
      gram.cwiseProduct((2.0 * dd / h_bw - (4.0 / (h_bw * h_bw)) * sq_dist.array())
                            .matrix())
          .sum();

  const double value =
      (term1 + term2 + term3 + term4) / (static_cast<double>(n) * static_cast<double>(n));
  if (!std::isfinite(value))
    throw numeric_error("hip_vstat produced a nonfinite value");
  return value;
}

double ksd_vstat(const ParticleSet& particles, const ScoreMatrix& scores,
                 double h_bw) {
  return hip_vstat(particles, scores, scores, h_bw);
}

ScoreMatrix averaged_score(const std::vector<ScoreMatrix>& score_list) {
  require(!score_list.empty(), "averaged_score needs at least one matrix");
  const auto rows = score_list.front().rows();
  const auto cols = score_list.front().cols();
  ScoreMatrix mean = ScoreMatrix::Zero(rows, cols);
  for (const auto& s : score_list) {
    require(s.rows() == rows && s.cols() == cols,
            "averaged_score matrices must share a shape");
    mean += s;
  }
  return mean / static_cast<double>(score_list.size());
}

}  // namespace dsvgd
