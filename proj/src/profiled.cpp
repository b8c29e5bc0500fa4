#include "mllab/profiled.hpp"

#include "mllab/error.hpp"

#include <cmath>
#include <numbers>

namespace mllab {

Hyperparameters unit_amplitude(const Hyperparameters& h) {
  Hyperparameters u = h;
  u.log_signal_var = 0.0;
  u.noise_mode = NoiseMode::ratio;
  return u;
}

Hyperparameters with_signal_var(const Hyperparameters& h_hat, double signal_var) {
  Hyperparameters h = unit_amplitude(h_hat);
  h.log_signal_var = std::log(signal_var);
  return h;
}

double LogdetSplit::residual() const { return std::abs(lhs - rhs); }

namespace {

struct UnitFit {
  GpFactorization f;
  double quad;  // y^T Chat^{-1} y
  double s2;
};

UnitFit unit_fit(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec) {
  GpFactorization f = factorize(d, unit_amplitude(h_hat), spec);
  const double quad = solve_lower(f.chol, d.y()).squaredNorm();
  const double s2 = quad / static_cast<double>(d.size());
  if (!(s2 > 0.0)) throw ZeroTarget("profiled signal variance is zero (all targets are zero)");
  return {std::move(f), quad, s2};
}

ProfiledResult assemble(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec,
                        const UnitFit& u) {
  const double n = static_cast<double>(d.size());
  ProfiledResult r;
  r.sigma_f_hat_sq = u.s2;
  r.collapsed_data_fit = -0.5 * n;
  r.term_data_refit = 0.5 * n * std::log(u.s2);
  r.term_logdet_hat = 0.5 * logdet(u.f.chol);
  r.constant = -0.5 * n * std::log(2.0 * std::numbers::pi);
  r.profiled_total = r.collapsed_data_fit - r.term_data_refit - r.term_logdet_hat + r.constant;
  r.induced = log_marginal_likelihood(d, with_signal_var(h_hat, u.s2), spec);
  r.equivalence_residual = std::abs(r.profiled_total - r.induced.total);
  return r;
}

}  // namespace

double profiled_signal_variance(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec) {
  return unit_fit(d, h_hat, spec).s2;
}

LogdetSplit logdet_split(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec) {
  if (h.noise_mode != NoiseMode::ratio) {
    throw InputError("logdet_split needs ratio noise mode (s_n^2 = r * s_f^2)");
  }
  const double n = static_cast<double>(d.size());
  LogdetSplit s;
  s.lhs = 0.5 * logdet(cholesky_with_jitter(noisy_covariance(d, h, spec)));
  s.rhs = 0.5 * n * h.log_signal_var +
          0.5 * logdet(cholesky_with_jitter(noisy_covariance(d, unit_amplitude(h), spec)));
  return s;
}

ProfiledResult profiled_objective(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec) {
  return assemble(d, h_hat, spec, unit_fit(d, h_hat, spec));
}

ProfiledValueGrad profiled_value_and_gradient(const Dataset& d, const Hyperparameters& h_hat,
                                              const KernelSpec& spec) {
  const UnitFit u = unit_fit(d, h_hat, spec);
  const Matrix W = u.f.alpha * u.f.alpha.transpose() / u.s2 - inverse_spd(u.f.chol);
  Vector g = trace_gradient(d, unit_amplitude(h_hat), spec, W);
  g(Hyperparameters::kSignalVar) = 0.0;
  return {assemble(d, h_hat, spec, u), std::move(g)};
}

Vector profiled_gradient(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec) {
  return profiled_value_and_gradient(d, h_hat, spec).gradient;
}

StationarityReport verify_stationarity(const Dataset& d, const Hyperparameters& h_hat, const KernelSpec& spec,
                                       double tolerance) {
  StationarityReport r;
  r.sigma_f_hat_sq = profiled_signal_variance(d, h_hat, spec);
  const Hyperparameters at_hat = with_signal_var(h_hat, r.sigma_f_hat_sq);
  const LmlValueGrad vg = lml_value_and_gradient(d, at_hat, spec);
  r.gradient = vg.gradient(Hyperparameters::kSignalVar);
  r.lml_at_hat = vg.value.total;
  r.lml_below = log_marginal_likelihood(d, with_signal_var(h_hat, 0.9 * r.sigma_f_hat_sq), spec).total;
  r.lml_above = log_marginal_likelihood(d, with_signal_var(h_hat, 1.1 * r.sigma_f_hat_sq), spec).total;
  r.stationary = std::abs(r.gradient) <= tolerance;
  r.maximal = r.lml_at_hat > r.lml_below && r.lml_at_hat > r.lml_above;
  return r;
}

Vector sensitivity_of_profiled_amplitude(const Dataset& d, const Hyperparameters& h_hat,
                                         const KernelSpec& spec) {
  const UnitFit u = unit_fit(d, h_hat, spec);
  const Matrix W = u.f.alpha * u.f.alpha.transpose();
  // trace_gradient returns 1/2 alpha^T dChat alpha per coordinate.
  Vector g = -2.0 / (static_cast<double>(d.size()) * u.s2) * trace_gradient(d, unit_amplitude(h_hat), spec, W);
  g(Hyperparameters::kSignalVar) = 0.0;
  return g;
}

}  // namespace mllab
