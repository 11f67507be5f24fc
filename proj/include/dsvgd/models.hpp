#pragma once

#include <cstdint>
#include <variant>

#include "dsvgd/common.hpp"
#include "dsvgd/rng.hpp"

namespace dsvgd {

// Conjugate sanity model: prior N(mean, diag(variance)), pseudo-likelihood
// per data row N(theta | x_i, I).
struct GaussianToySpec {
  Vector mean;
  Vector variance;
};

// Bayesian logistic regression, theta = [w, a] with a = log(xi) and prior
// w | xi ~ N(0, xi^-1 I), xi ~ Gamma(gamma_shape, gamma_rate).
struct BlrSpec {
  Eigen::Index feature_dim = 0;
  double gamma_shape = 1.0;
  double gamma_rate = 0.01;
};

// One-hidden-layer ReLU network, Gaussian observation noise with precision
// gamma; theta = [vec(W1), b1, vec(W2), b2, log(gamma)] (column-major blocks).
// Weight prior N(0, weight_precision^-1) on every network parameter.
struct BnnSpec {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden = 100;
  Eigen::Index output_dim = 0;
  double weight_precision = 2.718281828459045;
  double gamma_shape = 1.0;
  double gamma_rate = 0.01;
};

struct ModelSpec {
  std::variant<GaussianToySpec, BlrSpec, BnnSpec> variant;
  double temperature = 1.0;  // alpha

  static ModelSpec gaussian_toy(Vector mean, Vector variance,
                                double temperature = 1.0);
  static ModelSpec blr(Eigen::Index feature_dim, double temperature = 1.0);
  static ModelSpec bnn(Eigen::Index input_dim, Eigen::Index output_dim,
                       Eigen::Index hidden = 100, double temperature = 1.0);

  Eigen::Index param_dim() const;
};

struct LabeledBatch {
  Matrix features;  // n x f
  Vector labels;    // +-1 for BLR, class index for BNN, unused for the toy
};

double prior_log_density(const ModelSpec& model, const Vector& theta);
Vector prior_score(const ModelSpec& model, const Vector& theta);

// scale * alpha^-1 * sum_i log p(y_i | x_i, theta) and its gradient.
double likelihood_log_density(const ModelSpec& model, const Vector& theta,
                              const LabeledBatch& batch, double scale = 1.0);
Vector likelihood_score(const ModelSpec& model, const Vector& theta,
                        const LabeledBatch& batch, double scale = 1.0);

// Bayesian model average. BLR: n x 1 probabilities of label +1. BNN: n x C
// mean network outputs. The toy model has no predictive task.
Matrix predict_ensemble(const ModelSpec& model, const ParticleSet& particles,
                        const Matrix& features);

// One draw from the prior (used to initialize particle sets).
Vector sample_prior(const ModelSpec& model, Rng& rng);
ParticleSet sample_prior_particles(const ModelSpec& model, Eigen::Index count,
                                   Rng& rng);

// Forward pass of the BNN on a feature matrix, n x C.
Matrix bnn_forward(const BnnSpec& spec, const Vector& theta,
                   const Matrix& features);

}  // namespace dsvgd
