#include "mllab/kernels.hpp"

#include "mllab/error.hpp"

#include <algorithm>
#include <cmath>

namespace mllab {

std::string to_string(NoiseMode m) { return m == NoiseMode::absolute ? "absolute" : "ratio"; }

std::string to_string(KernelFamily f) { return f == KernelFamily::rbf ? "rbf" : "deep_rbf"; }

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "absolute") return NoiseMode::absolute;
  if (s == "ratio") return NoiseMode::ratio;
  throw InputError("unknown noise mode '" + s + "'");
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "rbf") return KernelFamily::rbf;
  if (s == "deep_rbf") return KernelFamily::deep_rbf;
  throw InputError("unknown kernel family '" + s + "'");
}

double Hyperparameters::lengthscale() const { return std::exp(log_lengthscale); }

double Hyperparameters::signal_var() const { return std::exp(log_signal_var); }

double Hyperparameters::noise_variance() const {
  const double n = std::exp(log_noise);
  return noise_mode == NoiseMode::ratio ? n * signal_var() : n;
}

Index Hyperparameters::num_params() const {
  return kFirstWeight + (net ? static_cast<Index>(net->size()) : 0);
}

Vector Hyperparameters::to_vector() const {
  Vector v(num_params());
  v(kLengthscale) = log_lengthscale;
  v(kSignalVar) = log_signal_var;
  v(kNoise) = log_noise;
  if (net) v.tail(static_cast<Index>(net->size())) = net->flat();
  return v;
}

Hyperparameters Hyperparameters::with_vector(const Vector& v) const {
  if (v.size() != num_params()) throw DimensionMismatch("hyperparameter vector has wrong length");
  Hyperparameters h = *this;
  h.log_lengthscale = v(kLengthscale);
  h.log_signal_var = v(kSignalVar);
  h.log_noise = v(kNoise);
  if (net) h.net = NetWeights(net->spec(), v.tail(static_cast<Index>(net->size())));
  return h;
}

void Hyperparameters::validate() const {
  if (!std::isfinite(log_lengthscale) || !std::isfinite(log_signal_var) ||
      !(std::isfinite(log_noise) || log_noise == -INFINITY)) {
    throw NonFiniteValue("hyperparameters must be finite (log_noise may be -inf for zero noise)");
  }
  if (!std::isfinite(lengthscale()) || lengthscale() <= 0.0 || !std::isfinite(signal_var()) ||
      signal_var() <= 0.0 || !std::isfinite(noise_variance())) {
    throw NonFiniteValue("exponentiated hyperparameters out of range");
  }
}

namespace {

double unit_rbf(const Vector& a, const Vector& b, double lengthscale) {
  if (a.size() != b.size()) throw DimensionMismatch("kernel inputs have different dimensions");
  const double ell2 = lengthscale * lengthscale;
  return std::exp(-(a - b).squaredNorm() / (2.0 * ell2));
}

const NetWeights& require_net(const Hyperparameters& h) {
  if (!h.net) throw MissingNetwork("deep kernel evaluated without network weights");
  return *h.net;
}

}  // namespace

double rbf_eval(const Vector& x, const Vector& xp, const Hyperparameters& h) {
  return h.signal_var() * unit_rbf(x, xp, h.lengthscale());
}

double deep_kernel_eval(const Vector& x, const Vector& xp, const Hyperparameters& h) {
  const NetWeights& w = require_net(h);
  return rbf_eval(net_forward(w, x), net_forward(w, xp), h);
}

Matrix kernel_features(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec) {
  if (spec.family == KernelFamily::rbf) return X;
  const NetWeights& w = require_net(h);
  Matrix Z(X.rows(), w.spec().output_dim());
  for (Index i = 0; i < X.rows(); ++i) Z.row(i) = net_forward(w, X.row(i).transpose()).transpose();
  return Z;
}

namespace {

// Unit-amplitude kernel matrix on already-warped features.
Matrix unit_kernel(const Matrix& Z, double lengthscale) {
  const Index n = Z.rows();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      const double v = unit_rbf(Z.row(i).transpose(), Z.row(j).transpose(), lengthscale);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix squared_distances(const Matrix& Z) {
  const Index n = Z.rows();
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Index j = 0; j < i; ++j) {
      const double v = (Z.row(i) - Z.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

}  // namespace

SymMatrix kernel_matrix(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec) {
  if (X.rows() < 1) throw DimensionMismatch("kernel matrix needs at least one input");
  const Matrix Z = kernel_features(X, h, spec);
  return SymMatrix(h.signal_var() * unit_kernel(Z, h.lengthscale()));
}

Matrix cross_kernel(const Matrix& X, const Matrix& Zs, const Hyperparameters& h, const KernelSpec& spec) {
  if (X.cols() != Zs.cols()) throw DimensionMismatch("cross kernel: input dimensions differ");
  const Matrix a = kernel_features(X, h, spec);
  const Matrix b = kernel_features(Zs, h, spec);
  Matrix k(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      k(i, j) = h.signal_var() * unit_rbf(a.row(i).transpose(), b.row(j).transpose(), h.lengthscale());
  return k;
}

KernelGrads kernel_matrix_grads(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec) {
  const Matrix Z = kernel_features(X, h, spec);
  const double ell2 = h.lengthscale() * h.lengthscale();
  const Matrix K = h.signal_var() * unit_kernel(Z, h.lengthscale());
  const Matrix D2 = squared_distances(Z);

  KernelGrads g{SymMatrix(K.cwiseProduct(D2) / ell2), SymMatrix(K), {}};
  if (spec.family != KernelFamily::deep_rbf) return g;

  // dK_ij/dw = -K_ij / l^2 * (z_i - z_j)^T (J_i - J_j), J_a = dz_a/dw.
  const NetWeights& w = require_net(h);
  const Index n = X.rows();
  const Index dout = w.spec().output_dim();
  const Index p = static_cast<Index>(w.size());
  std::vector<Matrix> jac(static_cast<std::size_t>(n), Matrix(dout, p));
  for (Index a = 0; a < n; ++a) {
    for (Index o = 0; o < dout; ++o) {
      Vector e = Vector::Unit(dout, o);
      jac[static_cast<std::size_t>(a)].row(o) = net_vjp(w, X.row(a).transpose(), e).weights.transpose();
    }
  }
  g.d_weights.reserve(static_cast<std::size_t>(p));
  for (Index k = 0; k < p; ++k) {
    Matrix dk = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < i; ++j) {
        const Vector dz = (Z.row(i) - Z.row(j)).transpose();
        const Vector dj = jac[static_cast<std::size_t>(i)].col(k) - jac[static_cast<std::size_t>(j)].col(k);
        const double v = -K(i, j) / ell2 * dz.dot(dj);
        dk(i, j) = v;
        dk(j, i) = v;
      }
    }
    g.d_weights.emplace_back(dk);
  }
  return g;
}

Vector contract_kernel_grads(const Matrix& X, const Hyperparameters& h, const KernelSpec& spec,
                             const Matrix& W) {
  const Index n = X.rows();
  if (W.rows() != n || W.cols() != n) throw DimensionMismatch("contraction weight matrix shape");
  const Matrix Z = kernel_features(X, h, spec);
  const double ell2 = h.lengthscale() * h.lengthscale();
  const Matrix K = h.signal_var() * unit_kernel(Z, h.lengthscale());
  const Matrix D2 = squared_distances(Z);

  Vector out = Vector::Zero(h.num_params());
  out(Hyperparameters::kLengthscale) = W.cwiseProduct(K).cwiseProduct(D2).sum() / ell2;
  out(Hyperparameters::kSignalVar) = W.cwiseProduct(K).sum();
  if (spec.family != KernelFamily::deep_rbf) return out;

  const NetWeights& w = require_net(h);
  Vector gw = Vector::Zero(static_cast<Index>(w.size()));
  for (Index a = 0; a < n; ++a) {
    // Both (a, j) and (j, a) terms contribute to z_a; W and K are symmetric.
    Vector upstream = Vector::Zero(Z.cols());
    for (Index j = 0; j < n; ++j) {
      if (j == a) continue;
      upstream -= (2.0 * W(a, j) * K(a, j) / ell2) * (Z.row(a) - Z.row(j)).transpose();
    }
    gw += net_vjp(w, X.row(a).transpose(), upstream).weights;
  }
  out.tail(gw.size()) = gw;
  return out;
}

namespace {

std::vector<double> pairwise_distances(const Matrix& X) {
  std::vector<double> out;
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < i; ++j) out.push_back((X.row(i) - X.row(j)).norm());
  return out;
}

}  // namespace

double median_pairwise_distance(const Matrix& X) {
  std::vector<double> d = pairwise_distances(X);
  if (d.empty()) return 0.0;
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size() / 2;
  return d.size() % 2 == 1 ? d[m] : 0.5 * (d[m - 1] + d[m]);
}

double max_pairwise_distance(const Matrix& X) {
  const std::vector<double> d = pairwise_distances(X);
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

}  // namespace mllab
