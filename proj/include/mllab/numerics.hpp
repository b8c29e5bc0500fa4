#pragma once

// Dense symmetric linear algebra and seeded randomness.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace mllab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Dense symmetric matrix. Construction symmetrizes as (A + A^T) / 2, so
/// entries are exactly mirrored, and rejects empty or non-finite input.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& a);

  Index size() const noexcept { return a_.rows(); }
  const Matrix& matrix() const noexcept { return a_; }
  double operator()(Index i, Index j) const { return a_(i, j); }
  double trace() const { return a_.trace(); }

 private:
  Matrix a_;
};

/// Lower Cholesky factor of A + jitter * I.
class CholFactor {
 public:
  /// Wraps an existing lower-triangular factor. Entries above the diagonal
  /// must be zero. Positivity of the diagonal is only guaranteed for factors
  /// produced by cholesky_with_jitter.
  CholFactor(Matrix lower, double jitter);

  Index size() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }
  double jitter_used() const noexcept { return jitter_; }

 private:
  Matrix lower_;
  double jitter_;
};

/// Jitter attempts: 0, then 1e-10 * (trace/n) growing by 10x up to
/// 1e-4 * (trace/n).
std::vector<double> jitter_schedule(const SymMatrix& a);

/// Factors A + jI for the first j in jitter_schedule(A) that succeeds.
/// Throws NotPositiveDefinite when the schedule is exhausted.
CholFactor cholesky_with_jitter(const SymMatrix& a);

/// log|A + jI| = 2 * sum(log diag(L)).
double logdet(const CholFactor& f);

/// Solves (A + jI) x = b. Throws DimensionMismatch.
Vector solve_spd(const CholFactor& f, const Vector& b);
Matrix solve_spd(const CholFactor& f, const Matrix& b);

/// L^{-1} b.
Vector solve_lower(const CholFactor& f, const Vector& b);

/// (A + jI)^{-1}.
Matrix inverse_spd(const CholFactor& f);

/// Eigenvalues in descending order, computed by cyclic Jacobi rotations.
/// Stops once the off-diagonal Frobenius norm is at most 1e-12 * ||A||_F;
/// throws NoConvergence after max_sweeps.
std::vector<double> sym_eigenvalues(const SymMatrix& a, int max_sweeps = 100);

struct Seed {
  std::uint64_t value = 0;
};

/// SplitMix64 (Steele, Lea & Flood 2014): state += 0x9e3779b97f4a7c15, output
/// is the state passed through the variant-13 finalizer. Substreams for one
/// seed are selected by `stream`, which is mixed into the initial state.
/// Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(Seed seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n). Uses the high half of a 128-bit product.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; draws are produced in pairs.
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates permutation of 0..n-1.
std::vector<Index> random_permutation(Index n, Rng& rng);

/// mean + L z, z standard normal from Rng(seed).
Vector mvn_sample(const Vector& mean, const CholFactor& cov_factor, Seed seed);

}  // namespace mllab
