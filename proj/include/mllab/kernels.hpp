#pragma once

// Unit-amplitude RBF and deep RBF kernels with an explicit signal variance,
// kernel-matrix assembly, and analytic derivatives.

#include "mllab/feature_net.hpp"
#include "mllab/numerics.hpp"

#include <optional>
#include <string>

namespace mllab {

/// absolute: sigma_n^2 = exp(log_noise).
/// ratio:    sigma_n^2 = exp(log_noise) * sigma_f^2, i.e. log_noise holds the
///           noise-to-signal ratio.
enum class NoiseMode { absolute, ratio };

enum class KernelFamily { rbf, deep_rbf };

std::string to_string(NoiseMode m);
std::string to_string(KernelFamily f);
NoiseMode noise_mode_from_string(const std::string& s);
KernelFamily kernel_family_from_string(const std::string& s);

struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
};

/// Log-domain hyperparameters. A log_noise of -infinity encodes exactly zero
/// noise; every other value must be finite.
///
/// Flat parameter layout used by gradients and the optimizer:
///   [0] log lengthscale, [1] log signal variance, [2] log noise,
///   [3...] network weights (NetWeights::flat order), when present.
struct Hyperparameters {
  double log_lengthscale = 0.0;
  double log_signal_var = 0.0;
  double log_noise = 0.0;
  NoiseMode noise_mode = NoiseMode::absolute;
  std::optional<NetWeights> net;

  static constexpr Index kLengthscale = 0;
  static constexpr Index kSignalVar = 1;
  static constexpr Index kNoise = 2;
  static constexpr Index kFirstWeight = 3;

  double lengthscale() const;
  double signal_var() const;
  /// Effective observation-noise variance sigma_n^2 in either mode.
  double noise_variance() const;

  Index num_params() const;
  Vector to_vector() const;
  /// Copy with every parameter replaced from a flat vector.
  Hyperparameters with_vector(const Vector& v) const;
  /// Throws NonFiniteValue unless the invariants above hold.
  void validate() const;
};

/// sigma_f^2 exp(-||x - x'||^2 / (2 l^2)).
double rbf_eval(const Vector& x, const Vector& xp, const Hyperparameters& h);

/// rbf_eval on network-warped inputs. Throws MissingNetwork.
double deep_kernel_eval(const Vector& x, const Vector& xp, const Hyperparameters& h);

/// Rows of X mapped into the space the RBF acts on: X itself for rbf, the
/// network outputs for deep_rbf.
Matrix kernel_features(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec);

/// K_ij = k(x_i, x_j), rows of X are inputs.
SymMatrix kernel_matrix(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec);

/// Cross-covariance k(X_i, Z_j), one row per row of X.
Matrix cross_kernel(const Matrix& X, const Matrix& Z, const Hyperparameters& h, const KernelSpec& spec);

/// Full derivative matrices of K. The log-noise coordinate is not a kernel
/// parameter and has no entry here.
struct KernelGrads {
  SymMatrix d_log_lengthscale;
  SymMatrix d_log_signal_var;
  std::vector<SymMatrix> d_weights;  // empty for rbf
};

KernelGrads kernel_matrix_grads(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec);

/// sum_ij W_ij dK_ij/dtheta for every parameter in the flat layout (the noise
/// coordinate is left at 0). W must be symmetric. This avoids materializing
/// one matrix per network weight.
Vector contract_kernel_grads(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec,
                             const Matrix& W);

/// Median and maximum Euclidean distance over distinct row pairs (0 when
/// there are fewer than two rows).
double median_pairwise_distance(const Matrix& X);
double max_pairwise_distance(const Matrix& X);

}  // namespace mllab
