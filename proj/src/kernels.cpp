#include "dsvgd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dsvgd {

namespace {

void check_pair(const Vector& x, const Vector& y, double h) {
  require(x.size() == y.size(), "kernel arguments must share a dimension");
  require(x.allFinite() && y.allFinite(), "kernel arguments must be finite");
  require(h > 0.0 && std::isfinite(h), "kernel bandwidth must be positive");
}

}  // namespace

BandwidthPolicy BandwidthPolicy::fixed(double h) {
  require(h > 0.0 && std::isfinite(h), "fixed bandwidth must be positive");
  return {Kind::Fixed, h};
}

BandwidthPolicy BandwidthPolicy::median_heuristic() {
  return {Kind::MedianHeuristic, 1.0};
}

double KernelSpec::resolve_bandwidth(const ParticleSet& particles) const {
  if (bandwidth.kind == BandwidthPolicy::Kind::Fixed) return bandwidth.fixed_value;
  return bandwidth_or_fallback(particles);
}

double eval_kernel(const Vector& x, const Vector& y, double h) {
  check_pair(x, y, h);
  return std::exp(-(x - y).squaredNorm() / h);
}

Vector grad_x_kernel(const Vector& x, const Vector& y, double h) {
  check_pair(x, y, h);
  const Vector diff = x - y;
  return (-2.0 / h) * std::exp(-diff.squaredNorm() / h) * diff;
}

double trace_grad_xy_kernel(const Vector& x, const Vector& y, double h) {
  check_pair(x, y, h);
  const double sq = (x - y).squaredNorm();
  const double d = static_cast<double>(x.size());
  return std::exp(-sq / h) * (2.0 * d / h - 4.0 * sq / (h * h));
}

double median_bandwidth(const ParticleSet& particles) {
  const auto n = particles.rows();
  require(n >= 2, "median bandwidth needs at least two particles");

  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dists.push_back((particles.row(i) - particles.row(j)).norm());

  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double med = (m % 2 == 1) ? dists[m / 2]
                                  : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);

  const double h = med * med / std::log(static_cast<double>(n));
  if (!(h > 0.0) || !std::isfinite(h)) return kFallbackBandwidth;
  return h;
}

double bandwidth_or_fallback(const ParticleSet& particles) {
  if (particles.rows() < 2) return kFallbackBandwidth;
  return median_bandwidth(particles);
}

double gaussian_kde_log_kernel(const Vector& x, const Vector& y, double b) {
  check_pair(x, y, b);
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * M_PI * b * b) -
         (x - y).squaredNorm() / (2.0 * b * b);
}

}  // namespace dsvgd
