#pragma once

#include "mllab/lab.hpp"

#include <cmath>
#include <functional>

namespace testing {

using namespace mllab;

inline Matrix column(std::initializer_list<double> xs) {
  Matrix X(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) X(i++, 0) = x;
  return X;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline Hyperparameters rbf_params(double lengthscale, double signal_var, double noise_var,
                                  NoiseMode mode = NoiseMode::absolute) {
  Hyperparameters h;
  h.log_lengthscale = std::log(lengthscale);
  h.log_signal_var = std::log(signal_var);
  h.log_noise = std::log(noise_var);
  h.noise_mode = mode;
  return h;
}

/// A random symmetric positive definite matrix B B^T + shift I.
inline Matrix random_spd(Index n, Rng& rng, double shift = 0.1) {
  Matrix B(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) B(i, j) = rng.normal();
  return B * B.transpose() + shift * Matrix::Identity(n, n);
}

/// Central differences of a scalar function of a flat vector.
inline Vector central_diff(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector p = x;
    Vector m = x;
    p(i) += h;
    m(i) -= h;
    g(i) = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

/// One seeded instance per index in absolute noise mode, alternating rbf and
/// deep_rbf, with moderate hyperparameters.
inline IdentityInstance absolute_instance(std::uint64_t seed, Index index) {
  IdentityInstance inst = random_identity_instance(Seed{seed}, index);
  inst.h_hat.noise_mode = NoiseMode::absolute;
  inst.h_hat.log_noise = inst.h_hat.log_noise + inst.h_hat.log_signal_var;
  return inst;
}

}  // namespace testing
