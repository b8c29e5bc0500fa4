#pragma once

// The signal variance profiled out of the marginal likelihood.
//
// With k = s_f^2 * khat and noise s_n^2 = r * s_f^2 (ratio mode), the LML is
// maximized over s_f^2 at
//
//   s_hat^2(theta) = y^T (Khat + r I)^{-1} y / N,
//
// and substituting it back gives
//
//   LML = -N/2 - N/2 log s_hat^2(theta) - 1/2 log|Khat + r I| - N/2 log 2 pi.
//
// The first term no longer depends on theta, but N/2 log s_hat^2(theta) is a
// data-fit term that does. Everything here operates on the unit-amplitude
// kernel: the signal variance of the incoming Hyperparameters is ignored and
// log_noise is read as log r.

#include "mllab/gp.hpp"

namespace mllab {

/// h with log_signal_var = 0 and ratio noise mode.
Hyperparameters unit_amplitude(const Hyperparameters& h);

/// Ratio-mode parameters with s_f^2 = signal_var and r taken from h_hat.
Hyperparameters with_signal_var(const Hyperparameters& h_hat, double signal_var);

/// y^T (Khat + r I)^{-1} y / N. Throws ZeroTarget when the result is not positive.
double profiled_signal_variance(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec);

struct LogdetSplit {
  double lhs = 0.0;  // 1/2 log|s_f^2 Khat + s_f^2 r I|
  double rhs = 0.0;  // N/2 log s_f^2 + 1/2 log|Khat + r I|
  double residual() const;
};

/// Both sides of the log-determinant split. h must be in ratio mode.
LogdetSplit logdet_split(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec);

struct ProfiledResult {
  double sigma_f_hat_sq = 0.0;
  double collapsed_data_fit = 0.0;  // -N/2
  double term_data_refit = 0.0;     // N/2 log s_hat^2(theta)
  double term_logdet_hat = 0.0;     // 1/2 log|Khat + r I|
  double constant = 0.0;            // -N/2 log 2 pi
  double profiled_total = 0.0;
  /// Full breakdown at s_f^2 = s_hat^2, s_n^2 = s_hat^2 r.
  MLLBreakdown induced;
  double equivalence_residual = 0.0;  // |profiled_total - induced.total|
};

ProfiledResult profiled_objective(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec);

/// Gradient of profiled_total in the flat layout; the signal-variance
/// coordinate is 0 since it has been profiled out.
Vector profiled_gradient(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec);

struct ProfiledValueGrad {
  ProfiledResult value;
  Vector gradient;
};

ProfiledValueGrad profiled_value_and_gradient(const Dataset& d, const Hyperparameters& h_hat,
                                              const KernelSpec& spec);

struct StationarityReport {
  double sigma_f_hat_sq = 0.0;
  double gradient = 0.0;  // dLML/dlog s_f^2 at s_hat^2
  double lml_at_hat = 0.0;
  double lml_below = 0.0;  // at 0.9 s_hat^2
  double lml_above = 0.0;  // at 1.1 s_hat^2
  bool stationary = false;
  bool maximal = false;
  bool ok() const { return stationary && maximal; }
};

StationarityReport verify_stationarity(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec,
                                       double tolerance = 1e-8);

/// d log s_hat^2 / dtheta = -(1/(N s_hat^2)) alpha^T dChat/dtheta alpha with
/// alpha = (Khat + r I)^{-1} y, in the flat layout (signal coordinate 0).
Vector sensitivity_of_profiled_amplitude(const Dataset& d, const Hyperparameters& h_hat,
                                         const KernelSpec& spec);

}  // namespace mllab
