#include "dsvgd/models.hpp"

#include <cmath>
#include <numbers>

namespace dsvgd {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double softplus(double t) {
  // log(1 + e^t) without overflow.
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_theta(const ModelSpec& model, const Vector& theta) {
  require(theta.size() == model.param_dim(), "parameter dimension mismatch");
  require(theta.allFinite(), "non-finite parameter vector");
}

void check_batch(const ModelSpec& model, const LabeledBatch& batch) {
  require(batch.features.rows() >= 1, "empty batch");
  require(batch.labels.size() == batch.features.rows(),
          "labels must match feature rows");
  if (const auto* toy = std::get_if<GaussianToySpec>(&model.variant)) {
    require(batch.features.cols() == toy->mean.size(),
            "feature dimension mismatch");
  } else if (const auto* blr = std::get_if<BlrSpec>(&model.variant)) {
    require(batch.features.cols() == blr->feature_dim,
            "feature dimension mismatch");
    for (Eigen::Index i = 0; i < batch.labels.size(); ++i) {
      require(batch.labels(i) == 1.0 || batch.labels(i) == -1.0,
              "binary labels must be +-1");
    }
  } else {
    const auto& bnn = std::get<BnnSpec>(model.variant);
    require(batch.features.cols() == bnn.input_dim,
            "feature dimension mismatch");
    for (Eigen::Index i = 0; i < batch.labels.size(); ++i) {
      const double c = batch.labels(i);
      require(c == std::floor(c) && c >= 0.0 &&
                  c < static_cast<double>(bnn.output_dim),
              "class label out of range");
    }
  }
}

// Views into a packed BNN parameter vector. Blocks are column-major.
struct BnnViews {
  Eigen::Map<const Matrix> w1;  // hidden x input
  Eigen::Map<const Vector> b1;
  Eigen::Map<const Matrix> w2;  // output x hidden
  Eigen::Map<const Vector> b2;
  double log_gamma;
};

BnnViews bnn_views(const BnnSpec& s, const Vector& theta) {
  const auto h = s.hidden;
  const auto f = s.input_dim;
  const auto c = s.output_dim;
  const double* p = theta.data();
  return BnnViews{Eigen::Map<const Matrix>(p, h, f),
                  Eigen::Map<const Vector>(p + h * f, h),
                  Eigen::Map<const Matrix>(p + h * f + h, c, h),
                  Eigen::Map<const Vector>(p + h * f + h + c * h, c),
                  theta(theta.size() - 1)};
}

Matrix one_hot(const Vector& labels, Eigen::Index classes) {
  Matrix y = Matrix::Zero(labels.size(), classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    y(i, static_cast<Eigen::Index>(labels(i))) = 1.0;
  }
  return y;
}

}  // namespace

ModelSpec ModelSpec::gaussian_toy(Vector mean, Vector variance,
                                  double temperature) {
  require(mean.size() > 0 && mean.size() == variance.size(),
          "toy mean and variance must be same nonzero size");
  require((variance.array() > 0.0).all(), "toy variances must be positive");
  require(temperature > 0.0, "temperature must be positive");
  return ModelSpec{GaussianToySpec{std::move(mean), std::move(variance)},
                   temperature};
}

ModelSpec ModelSpec::blr(Eigen::Index feature_dim, double temperature) {
  require(feature_dim > 0, "feature_dim must be positive");
  require(temperature > 0.0, "temperature must be positive");
  return ModelSpec{BlrSpec{feature_dim}, temperature};
}

ModelSpec ModelSpec::bnn(Eigen::Index input_dim, Eigen::Index output_dim,
                         Eigen::Index hidden, double temperature) {
  require(input_dim > 0 && output_dim > 0 && hidden > 0,
          "network dimensions must be positive");
  require(temperature > 0.0, "temperature must be positive");
  BnnSpec s;
  s.input_dim = input_dim;
  s.hidden = hidden;
  s.output_dim = output_dim;
  return ModelSpec{s, temperature};
}

Eigen::Index ModelSpec::param_dim() const {
  if (const auto* toy = std::get_if<GaussianToySpec>(&variant)) {
    return toy->mean.size();
  }
  if (const auto* blr = std::get_if<BlrSpec>(&variant)) {
    return blr->feature_dim + 1;
  }
  const auto& s = std::get<BnnSpec>(variant);
  return s.hidden * s.input_dim + s.hidden + s.output_dim * s.hidden +
         s.output_dim + 1;
}

double prior_log_density(const ModelSpec& model, const Vector& theta) {
  check_theta(model, theta);
  if (const auto* toy = std::get_if<GaussianToySpec>(&model.variant)) {
    const Eigen::ArrayXd diff = theta.array() - toy->mean.array();
    return (-0.5 * (kLog2Pi + toy->variance.array().log()) -
            diff.square() / (2.0 * toy->variance.array()))
        .sum();
  }
  if (const auto* blr = std::get_if<BlrSpec>(&model.variant)) {
    const auto dw = blr->feature_dim;
    const double a = theta(dw);
    const double xi = std::exp(a);
    const double wsq = theta.head(dw).squaredNorm();
    // log N(w | 0, xi^-1 I) + log Gamma(xi | a0, b0) + a (Jacobian of xi=e^a)
    const double log_norm =
        -0.5 * dw * kLog2Pi + 0.5 * dw * a - 0.5 * xi * wsq;
    const double log_gamma_pdf = blr->gamma_shape * std::log(blr->gamma_rate) -
                                 std::lgamma(blr->gamma_shape) +
                                 (blr->gamma_shape - 1.0) * a -
                                 blr->gamma_rate * xi;
    return log_norm + log_gamma_pdf + a;
  }
  const auto& s = std::get<BnnSpec>(model.variant);
  const auto nw = theta.size() - 1;
  const double g = theta(nw);
  const double gamma = std::exp(g);
  const double wsq = theta.head(nw).squaredNorm();
  const double log_weights = -0.5 * nw * kLog2Pi +
                             0.5 * nw * std::log(s.weight_precision) -
                             0.5 * s.weight_precision * wsq;
  const double log_gamma_pdf = s.gamma_shape * std::log(s.gamma_rate) -
                               std::lgamma(s.gamma_shape) +
                               (s.gamma_shape - 1.0) * g - s.gamma_rate * gamma;
  return log_weights + log_gamma_pdf + g;
}

Vector prior_score(const ModelSpec& model, const Vector& theta) {
  check_theta(model, theta);
  if (const auto* toy = std::get_if<GaussianToySpec>(&model.variant)) {
    return ((toy->mean - theta).array() / toy->variance.array()).matrix();
  }
  if (const auto* blr = std::get_if<BlrSpec>(&model.variant)) {
    const auto dw = blr->feature_dim;
    const double xi = std::exp(theta(dw));
    Vector grad(dw + 1);
    grad.head(dw) = -xi * theta.head(dw);
    grad(dw) = 0.5 * dw + blr->gamma_shape - blr->gamma_rate * xi -
               0.5 * xi * theta.head(dw).squaredNorm();
    return grad;
  }
  const auto& s = std::get<BnnSpec>(model.variant);
  const auto nw = theta.size() - 1;
  const double gamma = std::exp(theta(nw));
  Vector grad(theta.size());
  grad.head(nw) = -s.weight_precision * theta.head(nw);
  grad(nw) = s.gamma_shape - s.gamma_rate * gamma;
  return grad;
}

double likelihood_log_density(const ModelSpec& model, const Vector& theta,
                              const LabeledBatch& batch, double scale) {
  check_theta(model, theta);
  check_batch(model, batch);
  require(scale > 0.0, "scale must be positive");
  const double factor = scale / model.temperature;
  if (std::holds_alternative<GaussianToySpec>(model.variant)) {
    const auto d = theta.size();
    const Matrix diff = batch.features.rowwise() - theta.transpose();
    const double n = static_cast<double>(batch.features.rows());
    return factor * (-0.5 * n * d * kLog2Pi -
                     0.5 * diff.rowwise().squaredNorm().sum());
  }
  if (const auto* blr = std::get_if<BlrSpec>(&model.variant)) {
    const Vector margins = (batch.features * theta.head(blr->feature_dim))
                               .cwiseProduct(batch.labels);
    double total = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      total -= softplus(-margins(i));
    }
    return factor * total;
  }
  const auto& s = std::get<BnnSpec>(model.variant);
  const auto v = bnn_views(s, theta);
  const double gamma = std::exp(v.log_gamma);
  const Matrix f = bnn_forward(s, theta, batch.features);
  const Matrix residual = one_hot(batch.labels, s.output_dim) - f;
  const double n = static_cast<double>(batch.features.rows());
  const double c = static_cast<double>(s.output_dim);
  return factor * (0.5 * n * c * (v.log_gamma - kLog2Pi) -
                   0.5 * gamma * residual.squaredNorm());
}

Vector likelihood_score(const ModelSpec& model, const Vector& theta,
                        const LabeledBatch& batch, double scale) {
  check_theta(model, theta);
  check_batch(model, batch);
  require(scale > 0.0, "scale must be positive");
  const double factor = scale / model.temperature;
  if (std::holds_alternative<GaussianToySpec>(model.variant)) {
    const Matrix diff = batch.features.rowwise() - theta.transpose();
    return factor * diff.colwise().sum().transpose();
  }
  if (const auto* blr = std::get_if<BlrSpec>(&model.variant)) {
    const auto dw = blr->feature_dim;
    const Vector margins =
        (batch.features * theta.head(dw)).cwiseProduct(batch.labels);
    Vector grad = Vector::Zero(dw + 1);
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      grad.head(dw) += batch.labels(i) * sigmoid(-margins(i)) *
                       batch.features.row(i).transpose();
    }
    return factor * grad;
  }
  const auto& s = std::get<BnnSpec>(model.variant);
  const auto v = bnn_views(s, theta);
  const double gamma = std::exp(v.log_gamma);
  const Matrix& x = batch.features;
  const Matrix z = (x * v.w1.transpose()).rowwise() + v.b1.transpose();
  const Matrix hidden = z.cwiseMax(0.0);
  const Matrix f = (hidden * v.w2.transpose()).rowwise() + v.b2.transpose();
  const Matrix residual = one_hot(batch.labels, s.output_dim) - f;

  const Matrix d_w2 = gamma * residual.transpose() * hidden;
  const Vector d_b2 = gamma * residual.colwise().sum().transpose();
  const Matrix d_hidden = gamma * residual * v.w2;
  const Matrix d_z =
      d_hidden.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  const Matrix d_w1 = d_z.transpose() * x;
  const Vector d_b1 = d_z.colwise().sum().transpose();
  const double n = static_cast<double>(x.rows());
  const double c = static_cast<double>(s.output_dim);
  const double d_log_gamma = 0.5 * n * c - 0.5 * gamma * residual.squaredNorm();

  Vector grad(theta.size());
  const auto h = s.hidden;
  const auto fi = s.input_dim;
  const auto co = s.output_dim;
  Eigen::Map<Matrix>(grad.data(), h, fi) = d_w1;
  grad.segment(h * fi, h) = d_b1;
  Eigen::Map<Matrix>(grad.data() + h * fi + h, co, h) = d_w2;
  grad.segment(h * fi + h + co * h, co) = d_b2;
  grad(grad.size() - 1) = d_log_gamma;
  return factor * grad;
}

Matrix bnn_forward(const BnnSpec& spec, const Vector& theta,
                   const Matrix& features) {
  require(features.cols() == spec.input_dim, "feature dimension mismatch");
  const auto v = bnn_views(spec, theta);
  const Matrix z = (features * v.w1.transpose()).rowwise() + v.b1.transpose();
  return (z.cwiseMax(0.0) * v.w2.transpose()).rowwise() + v.b2.transpose();
}

Matrix predict_ensemble(const ModelSpec& model, const ParticleSet& particles,
                        const Matrix& features) {
  require(particles.rows() > 0, "empty particle set");
  require(particles.cols() == model.param_dim(),
          "particle dimension mismatch");
  require(!std::holds_alternative<GaussianToySpec>(model.variant),
          "toy model has no predictive task");
  const auto n_particles = particles.rows();
  if (const auto* blr = std::get_if<BlrSpec>(&model.variant)) {
    require(features.cols() == blr->feature_dim, "feature dimension mismatch");
    Matrix probs = Matrix::Zero(features.rows(), 1);
    for (Eigen::Index p = 0; p < n_particles; ++p) {
      const Vector margins =
          features * particles.row(p).head(blr->feature_dim).transpose();
      for (Eigen::Index i = 0; i < margins.size(); ++i) {
        probs(i, 0) += sigmoid(margins(i));
      }
    }
    return probs / static_cast<double>(n_particles);
  }
  const auto& s = std::get<BnnSpec>(model.variant);
  require(features.cols() == s.input_dim, "feature dimension mismatch");
  Matrix scores = Matrix::Zero(features.rows(), s.output_dim);
  for (Eigen::Index p = 0; p < n_particles; ++p) {
    scores += bnn_forward(s, particles.row(p).transpose(), features);
  }
  return scores / static_cast<double>(n_particles);
}

Vector sample_prior(const ModelSpec& model, Rng& rng) {
  if (const auto* toy = std::get_if<GaussianToySpec>(&model.variant)) {
    Vector theta(toy->mean.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      theta(j) = toy->mean(j) + std::sqrt(toy->variance(j)) * rng.normal();
    }
    return theta;
  }
  if (const auto* blr = std::get_if<BlrSpec>(&model.variant)) {
    require(blr->gamma_shape == 1.0,
            "prior sampling implemented for unit shape only");
    const double xi = rng.exponential(blr->gamma_rate);
    const double sd = 1.0 / std::sqrt(xi);
    Vector theta(blr->feature_dim + 1);
    for (Eigen::Index j = 0; j < blr->feature_dim; ++j) {
      theta(j) = sd * rng.normal();
    }
    theta(blr->feature_dim) = std::log(xi);
    return theta;
  }
  const auto& s = std::get<BnnSpec>(model.variant);
  require(s.gamma_shape == 1.0,
          "prior sampling implemented for unit shape only");
  const auto dim = model.param_dim();
  const double sd = 1.0 / std::sqrt(s.weight_precision);
  Vector theta(dim);
  for (Eigen::Index j = 0; j < dim - 1; ++j) theta(j) = sd * rng.normal();
  theta(dim - 1) = std::log(rng.exponential(s.gamma_rate));
  return theta;
}

ParticleSet sample_prior_particles(const ModelSpec& model, Eigen::Index count,
                                   Rng& rng) {
  require(count > 0, "particle count must be positive");
  ParticleSet particles(count, model.param_dim());
  for (Eigen::Index i = 0; i < count; ++i) {
    particles.row(i) = sample_prior(model, rng).transpose();
  }
  return particles;
}

}  // namespace dsvgd
