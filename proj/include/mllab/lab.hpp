#pragma once

// Synthetic data, spectrum diagnostics and the experiments built on them.

#include "mllab/objectives.hpp"
#include "mllab/profiled.hpp"

#include <string>
#include <vector>

namespace mllab {

enum class SyntheticKind { gp_sample, sine, step };
std::string to_string(SyntheticKind k);
SyntheticKind synthetic_kind_from_string(const std::string& s);

struct GeneratorParams {
  double lengthscale = 1.0;  // gp_sample prior
  double signal_var = 1.0;   // gp_sample prior
  int dim = 1;
  double lo = 0.0;
  double hi = 10.0;
};

/// Inputs uniform on [lo, hi]^dim; targets
///   gp_sample: f ~ GP(0, RBF(lengthscale, signal_var)) at the inputs,
///   sine:      sin(2 pi x_0 / 4),
///   step:      sign(x_0 - (lo + hi) / 2),
/// plus N(0, noise_sd^2) noise. Inputs, prior draw and noise use separate
/// substreams of `seed`.
Dataset generate_synthetic(SyntheticKind kind, Index n, double noise_sd, Seed seed,
                           const GeneratorParams& params = {});

struct SpectrumDiagnostics {
  std::vector<double> eigenvalues;  // descending
  double logdet = 0.0;              // sum of log eigenvalues; -inf if singular
  double effective_rank = 0.0;
  double mean_abs_offdiag_corr = 0.0;
};

/// Eigenvalues below 1e-12 * lambda_max are floored to that value inside the
/// entropy used for the effective rank, and nowhere else. The correlation is
/// taken from D^{-1/2} K D^{-1/2}.
SpectrumDiagnostics spectrum_diagnostics(const SymMatrix& K);

/// Mean |R_ij| over i != j for R = D^{-1/2} K D^{-1/2}; 0 for a 1x1 matrix.
double mean_abs_offdiag_correlation(const SymMatrix& K);

/// lo:hi:log:count or lo:hi:lin:count.
struct GridSpec {
  double lo = 0.1;
  double hi = 1000.0;
  bool log_spaced = true;
  int count = 25;

  static GridSpec parse(const std::string& s);
  std::string to_string() const;
  std::vector<double> values() const;
};

struct SweepRow {
  double lengthscale = 0.0;
  MLLBreakdown lml;
  // Spectrum of K + s_n^2 I, whose log-determinant is -2 * complexity.
  double logdet = 0.0;
  double effective_rank = 0.0;
  double mean_abs_offdiag_corr = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::size_t argmax_row = 0;  // by total; lowest index wins ties
};

/// One row per lengthscale with the other hyperparameters taken from h_base.
/// Throws InputError unless the grid is nonempty and strictly increasing.
SweepReport run_lengthscale_sweep(const Dataset& d, const std::vector<double>& lengthscales,
                                  const Hyperparameters& h_base, const KernelSpec& spec);

struct ComparisonConfig {
  SyntheticKind kind = SyntheticKind::gp_sample;
  Index n = 30;
  double noise_sd = 0.1;
  GeneratorParams generator{};
  std::vector<int> hidden{16, 16};
  int feature_dim = 2;
  std::vector<ObjectiveKind> objectives{ObjectiveKind::lml, ObjectiveKind::clml};
  int max_iters = 200;
  double grad_tol = 1e-6;
  Index clml_m = -1;  // -1: ceil(0.8 * n_train)
  Index clml_permutations = 10;
  double weight_decay = 0.0;
  Seed seed{};
};

struct ArmRecord {
  ObjectiveKind objective = ObjectiveKind::lml;
  bool ok = false;
  std::string error;
  int iterations = 0;
  StopReason reason = StopReason::max_iters;
  bool converged = false;
  double final_objective = 0.0;
  double lengthscale = 0.0;
  double signal_var = 0.0;
  double noise_variance = 0.0;
  double weight_norm = 0.0;
  MLLBreakdown train_lml;
  double test_rmse = 0.0;
  double test_nlpd = 0.0;
  double kernel_corr = 0.0;      // mean |corr| of K on the training inputs
  double covariance_corr = 0.0;  // same for K + s_n^2 I
  double effective_rank = 0.0;   // of K + s_n^2 I
};

struct ComparisonReport {
  ComparisonConfig config;
  Index n_train = 0;
  Index n_test = 0;
  Index clml_m = 0;
  std::vector<ArmRecord> arms;
};

/// Generates data, splits 80/20 by seed, and trains a deep RBF kernel from the
/// same initialization under every requested objective. Failures of one arm
/// are recorded in its record and do not stop the others.
ComparisonReport run_dkl_comparison(const ComparisonConfig& config);

struct IdentityInstance {
  Dataset data;
  Hyperparameters h_hat;  // ratio mode; log_signal_var is the s_f^2 used by the split check
  KernelSpec spec;
};

/// Seeded random instance: N in [2, 50], D in {1, 2}, X uniform on [0, 5],
/// c log-uniform on [0.1, 10], lengthscale in [0.2, 3], noise ratio in
/// [1e-3, 0.5]; rbf on even index and deep_rbf on odd. y is drawn from the
/// instance's own prior with signal variance c^2, and h_hat.log_signal_var is
/// drawn separately in c^2 [0.1, 10].
IdentityInstance random_identity_instance(Seed seed, Index index);

struct IdentityCheck {
  Index n = 0;
  KernelFamily family = KernelFamily::rbf;
  double equivalence_residual = 0.0;  // relative to max(1, |profiled_total|)
  double data_fit_residual = 0.0;     // |induced data fit + N/2|
  double split_residual = 0.0;        // relative to max(1, |lhs|)
  double stationarity_gradient = 0.0;
  bool maximal = false;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  double tolerance = 1e-8;
  double max_equivalence_residual = 0.0;
  double max_data_fit_residual = 0.0;
  double max_split_residual = 0.0;
  double max_stationarity_gradient = 0.0;
  bool all_maximal = true;
  bool passed() const;
};

IdentityReport verify_profiled_identities(const std::vector<IdentityInstance>& instances,
                                          double tolerance = 1e-8);

}  // namespace mllab
