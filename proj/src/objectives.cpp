#include "mllab/objectives.hpp"

#include "mllab/error.hpp"
#include "mllab/profiled.hpp"

#include <cmath>
#include <numbers>

namespace mllab {

std::string to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::lml: return "lml";
    case ObjectiveKind::profiled_lml: return "profiled_lml";
    case ObjectiveKind::clml: return "clml";
  }
  return "?";
}

ObjectiveKind objective_kind_from_string(const std::string& s) {
  if (s == "lml") return ObjectiveKind::lml;
  if (s == "profiled_lml") return ObjectiveKind::profiled_lml;
  if (s == "clml") return ObjectiveKind::clml;
  throw InputError("unknown objective '" + s + "'");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::gradient_tol: return "gradient_tol";
    case StopReason::max_iters: return "max_iters";
    case StopReason::line_search_failure: return "line_search_failure";
  }
  return "?";
}

ClmlConfig ClmlConfig::defaults(Index n, Seed seed) {
  ClmlConfig c;
  c.m = (8 * n + 9) / 10;  // ceil(0.8 n) without rounding surprises
  c.permutations = 10;
  c.seed = seed;
  return c;
}

Objective::Objective(ObjectiveKind kind, Dataset data, KernelSpec spec, ClmlConfig clml, double weight_decay)
    : kind_(kind), data_(std::move(data)), spec_(spec), clml_(std::move(clml)), weight_decay_(weight_decay) {
  if (!(weight_decay_ >= 0.0)) throw InputError("weight decay must be nonnegative");
  if (kind_ != ObjectiveKind::clml) return;
  const Index n = data_.size();
  if (clml_.m < 0 || clml_.m > n) throw InputError("clml conditioning size must lie in [0, N]");
  if (!clml_.explicit_permutations.empty()) {
    for (const auto& p : clml_.explicit_permutations) {
      std::vector<bool> seen(static_cast<std::size_t>(n), false);
      if (static_cast<Index>(p.size()) != n) throw InputError("clml permutation has wrong length");
      for (Index i : p) {
        if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) throw InputError("invalid clml permutation");
        seen[static_cast<std::size_t>(i)] = true;
      }
    }
    perms_ = clml_.explicit_permutations;
    return;
  }
  if (clml_.permutations < 1) throw InputError("clml needs at least one permutation");
  Rng rng(clml_.seed, 0x636c6d6c);
  for (Index k = 0; k < clml_.permutations; ++k) perms_.push_back(random_permutation(n, rng));
}

namespace {

Evaluation clml_evaluate(const Objective& obj, const Hyperparameters& h) {
  const Dataset& d = obj.data();
  const Index n = d.size();
  const Index m = obj.clml().m;
  if (m == n) return {0.0, Vector::Zero(h.num_params())};
  const LmlValueGrad full = lml_value_and_gradient(d, h, obj.kernel());
  if (m == 0) return {full.value.total, full.gradient};

  // Fixed reduction order over permutations keeps the sum bitwise stable.
  double cond_sum = 0.0;
  Vector cond_grad = Vector::Zero(h.num_params());
  for (const auto& perm : obj.permutations()) {
    const std::vector<Index> head(perm.begin(), perm.begin() + m);
    const LmlValueGrad sub = lml_value_and_gradient(d.subset(head), h, obj.kernel());
    cond_sum += sub.value.total;
    cond_grad += sub.gradient;
  }
  const double k = static_cast<double>(obj.permutations().size());
  return {full.value.total - cond_sum / k, full.gradient - cond_grad / k};
}

}  // namespace

Evaluation Objective::evaluate(const Hyperparameters& h) const {
  Evaluation e;
  switch (kind_) {
    case ObjectiveKind::lml: {
      LmlValueGrad vg = lml_value_and_gradient(data_, h, spec_);
      e = {vg.value.total, std::move(vg.gradient)};
      break;
    }
    case ObjectiveKind::profiled_lml: {
      ProfiledValueGrad vg = profiled_value_and_gradient(data_, h, spec_);
      e = {vg.value.profiled_total, std::move(vg.gradient)};
      break;
    }
    case ObjectiveKind::clml:
      e = clml_evaluate(*this, h);
      break;
  }
  if (weight_decay_ > 0.0 && h.net) {
    const Vector& w = h.net->flat();
    e.value -= 0.5 * weight_decay_ * w.squaredNorm();
    e.gradient.tail(w.size()) -= weight_decay_ * w;
  }
  return e;
}

Evaluation eval_objective(const Objective& obj, const Hyperparameters& h) { return obj.evaluate(h); }

double conditional_log_likelihood(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec,
                                  const std::vector<Index>& cond, const std::vector<Index>& target) {
  h.validate();
  const Matrix C = noisy_covariance(d, h, spec).matrix();
  const auto nc = static_cast<Index>(cond.size());
  const auto nt = static_cast<Index>(target.size());
  if (nt == 0) return 0.0;

  Matrix c_tt(nt, nt);
  Vector y_t(nt);
  for (Index i = 0; i < nt; ++i) {
    y_t(i) = d.y()(target[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < nt; ++j) c_tt(i, j) = C(target[static_cast<std::size_t>(i)], target[static_cast<std::size_t>(j)]);
  }
  Vector mean = Vector::Zero(nt);
  Matrix schur = c_tt;
  if (nc > 0) {
    Matrix c_cc(nc, nc);
    Matrix c_ct(nc, nt);
    Vector y_c(nc);
    for (Index i = 0; i < nc; ++i) {
      const Index ci = cond[static_cast<std::size_t>(i)];
      y_c(i) = d.y()(ci);
      for (Index j = 0; j < nc; ++j) c_cc(i, j) = C(ci, cond[static_cast<std::size_t>(j)]);
      for (Index j = 0; j < nt; ++j) c_ct(i, j) = C(ci, target[static_cast<std::size_t>(j)]);
    }
    const CholFactor fc = cholesky_with_jitter(SymMatrix(c_cc));
    mean = c_ct.transpose() * solve_spd(fc, y_c);
    schur -= c_ct.transpose() * solve_spd(fc, c_ct);
  }
  const CholFactor fs = cholesky_with_jitter(SymMatrix(schur));
  const Vector r = y_t - mean;
  return -0.5 * solve_lower(fs, r).squaredNorm() - 0.5 * logdet(fs) -
         0.5 * static_cast<double>(nt) * std::log(2.0 * std::numbers::pi);
}

double clml_direct(const Objective& obj, const Hyperparameters& h) {
  if (obj.kind() != ObjectiveKind::clml) throw InputError("clml_direct needs a clml objective");
  const Index m = obj.clml().m;
  double sum = 0.0;
  for (const auto& perm : obj.permutations()) {
    const std::vector<Index> head(perm.begin(), perm.begin() + m);
    const std::vector<Index> tail(perm.begin() + m, perm.end());
    sum += conditional_log_likelihood(obj.data(), h, obj.kernel(), head, tail);
  }
  return sum / static_cast<double>(obj.permutations().size());
}

namespace {

struct Trial {
  bool ok = false;
  Evaluation eval;
};

Trial try_evaluate(const Objective& obj, const Hyperparameters& h) {
  try {
    Evaluation e = obj.evaluate(h);
    if (!std::isfinite(e.value) || !e.gradient.allFinite()) return {};
    return {true, std::move(e)};
  } catch (const Error&) {
    return {};
  }
}

Vector masked(Vector g, const std::vector<bool>& fixed) {
  for (std::size_t i = 0; i < fixed.size() && static_cast<Index>(i) < g.size(); ++i) {
    if (fixed[i]) g(static_cast<Index>(i)) = 0.0;
  }
  return g;
}

}  // namespace

OptTrace optimize(const Objective& obj, const Hyperparameters& theta0, const OptConfig& config) {
  if (!config.fixed.empty() && static_cast<Index>(config.fixed.size()) != theta0.num_params()) {
    throw DimensionMismatch("optimizer freeze mask has wrong length");
  }
  OptTrace trace;
  trace.final = theta0;
  Hyperparameters current = theta0;
  Evaluation eval = obj.evaluate(current);
  ++trace.evaluations;
  Vector g = masked(eval.gradient, config.fixed);

  double base = config.initial_step;
  double last_step = 0.0;
  for (int iter = 0;; ++iter) {
    const double gmax = g.size() > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
    trace.iterations.push_back({current.to_vector(), eval.value, gmax, last_step});
    if (gmax <= config.grad_tol) {
      trace.converged = true;
      trace.reason = StopReason::gradient_tol;
      break;
    }
    if (iter >= config.max_iters) {
      trace.reason = StopReason::max_iters;
      break;
    }

    const Vector theta = current.to_vector();
    const double slope = g.squaredNorm();
    double t = gmax > 0.0 ? std::min(base, config.max_move / gmax) : base;
    bool accepted = false;
    for (int k = 0; k <= config.max_halvings; ++k, t *= 0.5) {
      Vector trial_theta = theta + t * g;
      // Zero noise is stored as -inf; keep it there rather than producing NaN.
      for (Index i = 0; i < theta.size(); ++i)
        if (!std::isfinite(theta(i))) trial_theta(i) = theta(i);
      const Hyperparameters trial_h = current.with_vector(trial_theta);
      Trial trial = try_evaluate(obj, trial_h);
      ++trace.evaluations;
      if (!trial.ok) continue;
      const double trial_gmax = masked(trial.eval.gradient, config.fixed).cwiseAbs().maxCoeff();
      const bool armijo = trial.eval.value > eval.value &&
                          trial.eval.value >= eval.value + config.armijo_c1 * t * slope;
      // Near the optimum the Armijo gain drops below the resolution of the
      // objective value; a non-decreasing step that shrinks the gradient still counts.
      const bool flat_progress = trial.eval.value >= eval.value && trial_gmax < gmax;
      if (armijo || flat_progress) {
        current = trial_h;
        eval = std::move(trial.eval);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      trace.reason = StopReason::line_search_failure;
      break;
    }
    g = masked(eval.gradient, config.fixed);
    last_step = t;
    base = 2.0 * t;
  }
  trace.final = current;
  return trace;
}

GradientCheck gradient_check_detail(const Objective& obj, const Hyperparameters& h, double step) {
  GradientCheck c;
  c.analytic = obj.evaluate(h).gradient;
  const Vector theta = h.to_vector();
  c.numeric = Vector::Zero(theta.size());
  c.error = Vector::Zero(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(theta(i))) continue;
    Vector plus = theta;
    Vector minus = theta;
    plus(i) += step;
    minus(i) -= step;
    const double fp = obj.evaluate(h.with_vector(plus)).value;
    const double fm = obj.evaluate(h.with_vector(minus)).value;
    c.numeric(i) = (fp - fm) / (2.0 * step);
    const double a = c.analytic(i);
    const double n = c.numeric(i);
    c.error(i) = std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
    c.max_error = std::max(c.max_error, c.error(i));
    if (i < Hyperparameters::kFirstWeight) {
      c.max_error_hyper = std::max(c.max_error_hyper, c.error(i));
    } else {
      c.max_error_weights = std::max(c.max_error_weights, c.error(i));
    }
  }
  return c;
}

double gradient_check(const Objective& obj, const Hyperparameters& h, double step) {
  return gradient_check_detail(obj, h, step).max_error;
}

Hyperparameters initial_hyperparameters(const Dataset& d, const KernelSpec& spec, NoiseMode mode,
                                        const std::optional<NetSpec>& net, Seed seed) {
  Hyperparameters h;
  h.noise_mode = mode;
  if (spec.family == KernelFamily::deep_rbf) {
    if (!net) throw MissingNetwork("deep kernel initialization needs a network spec");
    if (net->input_dim() != d.dim()) throw DimensionMismatch("network input width differs from data dimension");
    h.net = net_init(*net, seed);
  } else if (net) {
    h.net = net_init(*net, seed);
  }
  const double med = median_pairwise_distance(kernel_features(d.X(), h, spec));
  h.log_lengthscale = med > 0.0 ? std::log(med) : 0.0;

  const double mean = d.y().mean();
  const double var = (d.y().array() - mean).square().mean();
  const double signal = var > 0.0 ? var : (d.y().squaredNorm() > 0.0 ? d.y().squaredNorm() / d.size() : 1.0);
  h.log_signal_var = std::log(signal);
  h.log_noise = mode == NoiseMode::ratio ? std::log(0.1) : std::log(0.1 * signal);
  return h;
}

std::vector<bool> fixed_mask(const Hyperparameters& h, bool lengthscale, bool signal_var, bool noise, bool net) {
  std::vector<bool> mask(static_cast<std::size_t>(h.num_params()), net);
  mask[Hyperparameters::kLengthscale] = lengthscale;
  mask[Hyperparameters::kSignalVar] = signal_var;
  mask[Hyperparameters::kNoise] = noise;
  return mask;
}

}  // namespace mllab
