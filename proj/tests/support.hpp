#pragma once

#include <functional>

#include "dsvgd/common.hpp"
#include "dsvgd/rng.hpp"

namespace testsupport {

using dsvgd::Matrix;
using dsvgd::Vector;

inline Vector central_fd(const std::function<double(const Vector&)>& f,
                         const Vector& x, double eps = 1e-5) {
  Vector grad(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector hi = x, lo = x;
    hi(j) += eps;
    lo(j) -= eps;
    grad(j) = (f(hi) - f(lo)) / (2.0 * eps);
  }
  return grad;
}

inline double rel_err(const Vector& got, const Vector& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-12);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-12);
}

inline Matrix random_matrix(dsvgd::Rng& rng, Eigen::Index rows,
                            Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

inline Vector random_vector(dsvgd::Rng& rng, Eigen::Index size,
                            double scale = 1.0) {
  Vector v(size);
  for (Eigen::Index j = 0; j < size; ++j) v(j) = scale * rng.normal();
  return v;
}

}  // namespace testsupport
