#pragma once

#include "dsvgd/common.hpp"

#include <vector>

namespace dsvgd {

/// Pairwise term of the Hilbert inner product between two SVGD update
/// functions under the RBF kernel:
///   s_i^T k(t_i,t_j) s_j + s_i^T grad_j k + grad_i k^T s_j
///   + trace(grad_i grad_j k).
double h_pair(const Vector& s_i, const Vector& s_j, const Vector& theta_i,
              const Vector& theta_j, double h_bw);

/// V-statistic estimate of the inner product between the update functions
/// for two targets, sharing one particle set:
///   (1/N^2) sum_{i,j} h_pair(scores_1[i], scores_2[j], theta_i, theta_j).
double hip_vstat(const ParticleSet& particles, const ScoreMatrix& scores_1,
                 const ScoreMatrix& scores_2, double h_bw);

/// Kernelized Stein discrepancy: hip_vstat of a score matrix with itself.
/// Nonnegative up to roundoff (PSD quadratic form).
double ksd_vstat(const ParticleSet& particles, const ScoreMatrix& scores,
                 double h_bw);

/// Elementwise mean of K congruent score matrices; the score of the
/// geometric-mean density (prod_m p_m)^(1/K).
ScoreMatrix averaged_score(const std::vector<ScoreMatrix>& score_list);

}  // namespace dsvgd
