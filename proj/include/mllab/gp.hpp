#pragma once

// Exact GP regression: log marginal likelihood with its term breakdown,
// gradients, and the predictive posterior.

#include "mllab/kernels.hpp"

namespace mllab {

/// N rows of inputs and N targets.
class Dataset {
 public:
  Dataset(Matrix X, Vector y);

  const Matrix& X() const noexcept { return X_; }
  const Vector& y() const noexcept { return y_; }
  Index size() const noexcept { return y_.size(); }
  Index dim() const noexcept { return X_.cols(); }

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<Index>& rows) const;
  Dataset with_targets(Vector y) const;

 private:
  Matrix X_;
  Vector y_;
};

/// total == data_fit + complexity + constant, evaluated in that order.
struct MLLBreakdown {
  double data_fit = 0.0;    // -1/2 y^T (K + s_n^2 I)^{-1} y
  double complexity = 0.0;  // -1/2 log|K + s_n^2 I|
  double constant = 0.0;    // -N/2 log(2 pi)
  double total = 0.0;
};

/// Everything derived from one factorization of C = K + sigma_n^2 I.
struct GpFactorization {
  SymMatrix K;
  SymMatrix C;
  CholFactor chol;
  Vector alpha;  // C^{-1} y
};

/// Noise-augmented covariance of the training inputs.
SymMatrix noisy_covariance(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec);

GpFactorization factorize(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec);

MLLBreakdown log_marginal_likelihood(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec);
MLLBreakdown breakdown_from(const GpFactorization& f, const Vector& y);

/// Gradient of the LML in the Hyperparameters flat layout:
///   dLML/dtheta = 1/2 tr((alpha alpha^T - C^{-1}) dC/dtheta).
/// In ratio noise mode the signal-variance coordinate includes the noise term
/// sigma_n^2 = ratio * sigma_f^2. With zero noise the noise coordinate is 0.
Vector lml_gradient(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec);

struct LmlValueGrad {
  MLLBreakdown value;
  Vector gradient;
};

LmlValueGrad lml_value_and_gradient(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec);

/// Gradient of 1/2 tr(W dC/dtheta) over the flat layout, given symmetric W.
/// Shared by the full and profiled objectives.
Vector trace_gradient(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec, const Matrix& W);

struct Posterior {
  Vector mean;
  Vector variance;  // predictive variance of y*, so it includes sigma_n^2
};

Posterior posterior_predict(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec,
                            const Matrix& X_star);

}  // namespace mllab
