#include "mllab/numerics.hpp"

#include "mllab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mllab {

SymMatrix::SymMatrix(const Matrix& a) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw DimensionMismatch("SymMatrix needs a non-empty square matrix, got " +
                            std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  if (!a.allFinite()) throw NonFiniteValue("SymMatrix entries must be finite");
  a_ = (a + a.transpose()) * 0.5;
}

CholFactor::CholFactor(Matrix lower, double jitter) : lower_(std::move(lower)), jitter_(jitter) {
  if (lower_.rows() != lower_.cols()) throw DimensionMismatch("Cholesky factor must be square");
  for (Index j = 1; j < lower_.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if (lower_(i, j) != 0.0) throw InputError("Cholesky factor must be lower triangular");
    }
  }
  if (!(jitter_ >= 0.0)) throw InputError("jitter must be nonnegative");
}

std::vector<double> jitter_schedule(const SymMatrix& a) {
  const double scale = a.trace() / static_cast<double>(a.size());
  std::vector<double> out{0.0};
  if (!(scale > 0.0)) return out;
  for (double rel = 1e-10; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) out.push_back(rel * scale);
  return out;
}

namespace {

// Plain column Cholesky; returns false on the first nonpositive pivot.
bool try_cholesky(const Matrix& a, double jitter, Matrix& l) {
  const Index n = a.rows();
  l.setZero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j) + jitter;
    for (Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return true;
}

}  // namespace

CholFactor cholesky_with_jitter(const SymMatrix& a) {
  Matrix l;
  for (double jitter : jitter_schedule(a)) {
    if (try_cholesky(a.matrix(), jitter, l)) return CholFactor(std::move(l), jitter);
  }
  throw NotPositiveDefinite("matrix of size " + std::to_string(a.size()) +
                            " is not positive definite within the jitter schedule");
}

double logdet(const CholFactor& f) {
  return 2.0 * f.lower().diagonal().array().log().sum();
}

Vector solve_lower(const CholFactor& f, const Vector& b) {
  if (b.size() != f.size()) throw DimensionMismatch("solve: right-hand side has wrong length");
  return f.lower().triangularView<Eigen::Lower>().solve(b);
}

Vector solve_spd(const CholFactor& f, const Vector& b) {
  if (b.size() != f.size()) throw DimensionMismatch("solve: right-hand side has wrong length");
  const auto l = f.lower().triangularView<Eigen::Lower>();
  Vector z = l.solve(b);
  return f.lower().transpose().triangularView<Eigen::Upper>().solve(z);
}

Matrix solve_spd(const CholFactor& f, const Matrix& b) {
  if (b.rows() != f.size()) throw DimensionMismatch("solve: right-hand side has wrong rows");
  const auto l = f.lower().triangularView<Eigen::Lower>();
  Matrix z = l.solve(b);
  return f.lower().transpose().triangularView<Eigen::Upper>().solve(z);
}

Matrix inverse_spd(const CholFactor& f) {
  Matrix inv = solve_spd(f, Matrix(Matrix::Identity(f.size(), f.size())));
  return (inv + inv.transpose()) * 0.5;
}

std::vector<double> sym_eigenvalues(const SymMatrix& sym, int max_sweeps) {
  Matrix a = sym.matrix();
  const Index n = a.rows();
  const double target = 1e-12 * a.norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > target) {
    if (sweep++ >= max_sweeps) {
      throw NoConvergence("Jacobi eigenvalue iteration did not converge in " +
                          std::to_string(max_sweeps) + " sweeps");
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle from the symmetric Schur decomposition of the 2x2 block.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }

  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(Seed seed, std::uint64_t stream)
    : state_(seed.value ^ mix64(stream * kGolden + 0x5851f42d4c957f2dULL)) {}

Rng::result_type Rng::operator()() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  const unsigned __int128 prod = static_cast<unsigned __int128>((*this)()) * n;
  return static_cast<std::uint64_t>(prod >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

std::vector<Index> random_permutation(Index n, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

Vector mvn_sample(const Vector& mean, const CholFactor& cov_factor, Seed seed) {
  if (mean.size() != cov_factor.size()) throw DimensionMismatch("mvn_sample: mean/factor size");
  Rng rng(seed);
  Vector z(mean.size());
  for (Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + cov_factor.lower().triangularView<Eigen::Lower>() * z;
}

}  // namespace mllab
