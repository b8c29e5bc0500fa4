#pragma once

// Trainable objectives behind one interface, a backtracking gradient-ascent
// optimizer, and a central-difference gradient checker.

#include "mllab/gp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mllab {

enum class ObjectiveKind { lml, profiled_lml, clml };

std::string to_string(ObjectiveKind k);
ObjectiveKind objective_kind_from_string(const std::string& s);

/// Conditional LML settings. The conditioning set for a permutation p is its
/// first m indices; the remaining N - m points are scored.
struct ClmlConfig {
  Index m = 0;
  Index permutations = 10;
  Seed seed{};
  /// When non-empty these are used instead of seeded random permutations.
  std::vector<std::vector<Index>> explicit_permutations;

  /// m = ceil(0.8 N), 10 permutations.
  static ClmlConfig defaults(Index n, Seed seed);
};

struct Evaluation {
  double value = 0.0;
  Vector gradient;  // Hyperparameters flat layout
};

class Objective {
 public:
  Objective(ObjectiveKind kind, Dataset data, KernelSpec spec, ClmlConfig clml = {},
            double weight_decay = 0.0);

  ObjectiveKind kind() const noexcept { return kind_; }
  const Dataset& data() const noexcept { return data_; }
  const KernelSpec& kernel() const noexcept { return spec_; }
  const ClmlConfig& clml() const noexcept { return clml_; }
  double weight_decay() const noexcept { return weight_decay_; }
  /// Permutations actually used by the clml objective.
  const std::vector<std::vector<Index>>& permutations() const noexcept { return perms_; }

  Evaluation evaluate(const Hyperparameters& h) const;

 private:
  ObjectiveKind kind_;
  Dataset data_;
  KernelSpec spec_;
  ClmlConfig clml_;
  double weight_decay_;
  std::vector<std::vector<Index>> perms_;
};

/// Value and gradient. For clml the value is the mean over permutations of
/// LML(all) - LML(first m), i.e. the mean of log p(y_rest | y_first_m).
/// A nonzero weight decay subtracts 1/2 lambda ||w||^2 over network weights.
Evaluation eval_objective(const Objective& obj, const Hyperparameters& h);

/// log p(y_target | y_cond) from the conditional Gaussian of the noisy
/// covariance, C_tt - C_tc C_cc^{-1} C_ct and C_tc C_cc^{-1} y_c. Computed
/// without going through log_marginal_likelihood.
double conditional_log_likelihood(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec,
                                  const std::vector<Index>& cond, const std::vector<Index>& target);

/// Mean conditional log likelihood over the objective's permutations via
/// conditional_log_likelihood.
double clml_direct(const Objective& obj, const Hyperparameters& h);

enum class StopReason { gradient_tol, max_iters, line_search_failure };
std::string to_string(StopReason r);

struct OptConfig {
  int max_iters = 500;
  double grad_tol = 1e-6;
  double initial_step = 1.0;
  double armijo_c1 = 1e-4;
  int max_halvings = 60;
  /// Largest first trial move of any single coordinate per iteration.
  double max_move = 1.0;
  /// Per-coordinate freeze flags in the flat layout; empty means all free.
  std::vector<bool> fixed;
};

struct OptIterate {
  Vector theta;
  double value = 0.0;
  double grad_max_norm = 0.0;
  double step = 0.0;  // step length that produced this iterate (0 for the start)
};

struct OptTrace {
  std::vector<OptIterate> iterations;
  bool converged = false;
  StopReason reason = StopReason::max_iters;
  Hyperparameters final;
  int evaluations = 0;
};

/// Gradient ascent on the free coordinates. Each iteration tries step
/// t = min(base, max_move / ||g||_inf) along the gradient and halves t until
/// the Armijo condition
/// f(theta + t g) >= f(theta) + c1 t ||g||^2 holds with a strict increase;
/// the next base is 2t. A trial that leaves the value unchanged within
/// rounding but lowers the gradient max-norm is also accepted, so accepted
/// values never decrease. Evaluation failures (e.g. NotPositiveDefinite) count
/// as rejected trials.
OptTrace optimize(const Objective& obj, const Hyperparameters& theta0, const OptConfig& config);

struct GradientCheck {
  Vector analytic;
  Vector numeric;
  Vector error;  // |a - n| / max(1, |a|, |n|); 0 on skipped coordinates
  double max_error = 0.0;
  double max_error_hyper = 0.0;    // coordinates 0..2
  double max_error_weights = 0.0;  // network coordinates
};

/// Central differences with the given step in the flat (log / weight) domain.
/// Coordinates with non-finite values (zero noise) are skipped.
GradientCheck gradient_check_detail(const Objective& obj, const Hyperparameters& h, double step = 1e-6);
double gradient_check(const Objective& obj, const Hyperparameters& h, double step = 1e-6);

/// Scale-aware starting point: l = median pairwise distance of the kernel
/// features, s_f^2 = var(y), s_n^2 = 0.1 var(y) (ratio 0.1 in ratio mode),
/// network weights from net_init(seed). Falls back to 1 for degenerate scales.
Hyperparameters initial_hyperparameters(const Dataset& d, const KernelSpec& spec, NoiseMode mode,
                                        const std::optional<NetSpec>& net, Seed seed);

/// Flags in the flat layout for freezing lengthscale / signal / noise / net.
std::vector<bool> fixed_mask(const Hyperparameters& h, bool lengthscale, bool signal_var, bool noise,
                             bool net = false);

}  // namespace mllab
