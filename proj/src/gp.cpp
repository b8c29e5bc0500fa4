#include "mllab/gp.hpp"

#include "mllab/error.hpp"

#include <cmath>
#include <numbers>

namespace mllab {

Dataset::Dataset(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
  if (y_.size() < 1) throw DimensionMismatch("dataset needs at least one row");
  if (X_.rows() != y_.size()) {
    throw DimensionMismatch("dataset has " + std::to_string(X_.rows()) + " input rows but " +
                            std::to_string(y_.size()) + " targets");
  }
  if (X_.cols() < 1) throw DimensionMismatch("dataset inputs need at least one column");
  if (!X_.allFinite() || !y_.allFinite()) throw NonFiniteValue("dataset entries must be finite");
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Matrix X(static_cast<Index>(rows.size()), X_.cols());
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X.row(static_cast<Index>(i)) = X_.row(rows[i]);
    y(static_cast<Index>(i)) = y_(rows[i]);
  }
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::with_targets(Vector y) const { return Dataset(X_, std::move(y)); }

SymMatrix noisy_covariance(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec) {
  Matrix C = kernel_matrix(d.X(), h, spec).matrix();
  C.diagonal().array() += h.noise_variance();
  return SymMatrix(C);
}

GpFactorization factorize(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec) {
  h.validate();
  SymMatrix K = kernel_matrix(d.X(), h, spec);
  Matrix c = K.matrix();
  c.diagonal().array() += h.noise_variance();
  SymMatrix C(c);
  CholFactor chol = cholesky_with_jitter(C);
  Vector alpha = solve_spd(chol, d.y());
  return {std::move(K), std::move(C), std::move(chol), std::move(alpha)};
}

MLLBreakdown breakdown_from(const GpFactorization& f, const Vector& y) {
  MLLBreakdown b;
  const double n = static_cast<double>(y.size());
  b.data_fit = -0.5 * solve_lower(f.chol, y).squaredNorm();
  b.complexity = -0.5 * logdet(f.chol);
  b.constant = -0.5 * n * std::log(2.0 * std::numbers::pi);
  b.total = b.data_fit + b.complexity + b.constant;
  return b;
}

MLLBreakdown log_marginal_likelihood(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec) {
  return breakdown_from(factorize(d, h, spec), d.y());
}

Vector trace_gradient(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec, const Matrix& W) {
  Vector g = 0.5 * contract_kernel_grads(d.X(), h, spec, W);
  const double noise = h.noise_variance();
  const double noise_term = noise > 0.0 ? 0.5 * noise * W.trace() : 0.0;
  g(Hyperparameters::kNoise) = noise_term;
  if (h.noise_mode == NoiseMode::ratio) g(Hyperparameters::kSignalVar) += noise_term;
  return g;
}

LmlValueGrad lml_value_and_gradient(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec) {
  const GpFactorization f = factorize(d, h, spec);
  const Matrix W = f.alpha * f.alpha.transpose() - inverse_spd(f.chol);
  return {breakdown_from(f, d.y()), trace_gradient(d, h, spec, W)};
}

Vector lml_gradient(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec) {
  return lml_value_and_gradient(d, h, spec).gradient;
}

Posterior posterior_predict(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec,
                            const Matrix& X_star) {
  if (X_star.cols() != d.dim()) throw DimensionMismatch("test inputs have the wrong dimension");
  const GpFactorization f = factorize(d, h, spec);
  const Matrix k_star = cross_kernel(d.X(), X_star, h, spec);  // N x M
  Posterior p;
  p.mean = k_star.transpose() * f.alpha;
  const Matrix v = f.chol.lower().triangularView<Eigen::Lower>().solve(k_star);
  const double prior = h.signal_var();
  p.variance.resize(X_star.rows());
  for (Index j = 0; j < X_star.rows(); ++j) {
    const double latent = std::max(0.0, prior - v.col(j).squaredNorm());
    p.variance(j) = latent + h.noise_variance();
  }
  return p;
}

}  // namespace mllab
