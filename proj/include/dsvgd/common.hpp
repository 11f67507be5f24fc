#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace dsvgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// N x d matrix of model-parameter samples; row n is particle n.
using ParticleSet = Matrix;

// N x d matrix; row n is the score (gradient of a log-density) at particle n.
using ScoreMatrix = Matrix;

// Maps a parameter point to the score of some (possibly unnormalized) density.
using ScoreField = std::function<Vector(const Vector&)>;

// Caller violated a precondition (bad dimension, empty input, invalid value).
struct usage_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation produced NaN/Inf and the surrounding run must halt.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be read, parsed, or written.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw usage_error(msg);
}

}  // namespace dsvgd
