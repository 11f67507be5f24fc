#pragma once

#include "dsvgd/common.hpp"

namespace dsvgd {

// Bandwidth returned when the median heuristic degenerates (all particles
// coincident): any positive constant keeps the updates finite.
constexpr double kFallbackBandwidth = 1.0;

struct BandwidthPolicy {
  enum class Kind { Fixed, MedianHeuristic };

  Kind kind = Kind::MedianHeuristic;
  double fixed_value = 1.0;

  static BandwidthPolicy fixed(double h);
  static BandwidthPolicy median_heuristic();
};

struct KernelSpec {
  enum class Family { Rbf, GaussianKde };

  Family family = Family::Rbf;
  BandwidthPolicy bandwidth;

  // Fixed -> the stored value; MedianHeuristic -> median_bandwidth(particles).
  double resolve_bandwidth(const ParticleSet& particles) const;
};

/// RBF kernel k(x,y) = exp(-||x-y||^2 / h).
double eval_kernel(const Vector& x, const Vector& y, double h);

/// Gradient of the RBF kernel in its first argument:
/// grad_x k = -(2/h) (x-y) k(x,y).
Vector grad_x_kernel(const Vector& x, const Vector& y, double h);

/// trace(grad_x grad_y k) for the RBF kernel:
/// k(x,y) * (2d/h - 4||x-y||^2 / h^2).
double trace_grad_xy_kernel(const Vector& x, const Vector& y, double h);

/// Adaptive bandwidth med^2 / ln(N), med = median of the N(N-1)/2 pairwise
/// Euclidean distances. Falls back to kFallbackBandwidth when the result is
/// zero or nonfinite. Requires N >= 2.
double median_bandwidth(const ParticleSet& particles);

// median_bandwidth with the single-particle case mapped to the fallback
// instead of an error; used where particle counts of one are legal.
double bandwidth_or_fallback(const ParticleSet& particles);

/// Log of the normalized Gaussian KDE kernel,
/// log[(2 pi b^2)^(-d/2) exp(-||x-y||^2 / (2 b^2))].
double gaussian_kde_log_kernel(const Vector& x, const Vector& y, double b);

}  // namespace dsvgd
