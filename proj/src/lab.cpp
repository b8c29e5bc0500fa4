#include "mllab/lab.hpp"

#include "mllab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mllab {

std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::gp_sample: return "gp_sample";
    case SyntheticKind::sine: return "sine";
    case SyntheticKind::step: return "step";
  }
  return "?";
}

SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "gp_sample") return SyntheticKind::gp_sample;
  if (s == "sine") return SyntheticKind::sine;
  if (s == "step") return SyntheticKind::step;
  throw InputError("unknown generator '" + s + "'");
}

Dataset generate_synthetic(SyntheticKind kind, Index n, double noise_sd, Seed seed, const GeneratorParams& params) {
  if (n < 1) throw InputError("generator needs n >= 1");
  if (kind == SyntheticKind::gp_sample && n < 2) throw InputError("gp_sample needs n >= 2");
  if (params.dim < 1) throw InputError("generator dimension must be positive");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw InputError("noise_sd must be finite and >= 0");
  if (!(params.hi > params.lo)) throw InputError("generator range must satisfy lo < hi");

  Rng input_rng(seed, 1);
  Matrix X(n, params.dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < params.dim; ++j) X(i, j) = input_rng.uniform(params.lo, params.hi);

  Vector f(n);
  switch (kind) {
    case SyntheticKind::gp_sample: {
      Hyperparameters prior;
      prior.log_lengthscale = std::log(params.lengthscale);
      prior.log_signal_var = std::log(params.signal_var);
      prior.validate();
      const CholFactor chol = cholesky_with_jitter(kernel_matrix(X, prior, KernelSpec{}));
      f = mvn_sample(Vector::Zero(n), chol, Seed{Rng(seed, 2)()});
      break;
    }
    case SyntheticKind::sine:
      for (Index i = 0; i < n; ++i) f(i) = std::sin(2.0 * std::numbers::pi * X(i, 0) / 4.0);
      break;
    case SyntheticKind::step: {
      const double mid = 0.5 * (params.lo + params.hi);
      for (Index i = 0; i < n; ++i) f(i) = X(i, 0) > mid ? 1.0 : (X(i, 0) < mid ? -1.0 : 0.0);
      break;
    }
  }
  if (noise_sd > 0.0) {
    Rng noise_rng(seed, 3);
    for (Index i = 0; i < n; ++i) f(i) += noise_sd * noise_rng.normal();
  }
  return Dataset(std::move(X), std::move(f));
}

double mean_abs_offdiag_correlation(const SymMatrix& K) {
  const Index n = K.size();
  if (n < 2) return 0.0;
  const Vector inv_sd = K.matrix().diagonal().array().rsqrt();
  if (!inv_sd.allFinite()) throw InputError("correlation needs a positive diagonal");
  double sum = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j) sum += std::min(1.0, std::abs(K(i, j) * inv_sd(i) * inv_sd(j)));
  return sum / static_cast<double>(n * (n - 1));
}

SpectrumDiagnostics spectrum_diagnostics(const SymMatrix& K) {
  SpectrumDiagnostics s;
  s.eigenvalues = sym_eigenvalues(K);
  const double lmax = s.eigenvalues.front();
  if (!(lmax > 0.0)) throw InputError("spectrum diagnostics need a matrix with a positive eigenvalue");

  double ld = 0.0;
  for (double l : s.eigenvalues) ld += l > 0.0 ? std::log(l) : -INFINITY;
  s.logdet = ld;

  const double floor = 1e-12 * lmax;
  double total = 0.0;
  for (double l : s.eigenvalues) total += std::max(l, floor);
  double entropy = 0.0;
  for (double l : s.eigenvalues) {
    const double p = std::max(l, floor) / total;
    entropy -= p * std::log(p);
  }
  s.effective_rank = std::clamp(std::exp(entropy), 1.0, static_cast<double>(K.size()));
  s.mean_abs_offdiag_corr = mean_abs_offdiag_correlation(K);
  return s;
}

GridSpec GridSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() != 4) throw InputError("grid must look like lo:hi:log:count, got '" + text + "'");
  GridSpec g;
  try {
    std::size_t used = 0;
    g.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("lo");
    g.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("hi");
    g.count = std::stoi(parts[3], &used);
    if (used != parts[3].size()) throw std::invalid_argument("count");
  } catch (const std::exception&) {
    throw InputError("grid '" + text + "' has a non-numeric field");
  }
  if (parts[2] == "log") {
    g.log_spaced = true;
  } else if (parts[2] == "lin") {
    g.log_spaced = false;
  } else {
    throw InputError("grid spacing must be 'log' or 'lin'");
  }
  if (g.count < 1) throw InputError("grid count must be positive");
  if (g.count > 1 && !(g.hi > g.lo)) throw InputError("grid needs lo < hi");
  if (g.log_spaced && !(g.lo > 0.0)) throw InputError("log grid needs lo > 0");
  return g;
}

std::string GridSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << lo << ':' << hi << ':' << (log_spaced ? "log" : "lin") << ':' << count;
  return os.str();
}

std::vector<double> GridSpec::values() const {
  std::vector<double> v(static_cast<std::size_t>(count));
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    v[static_cast<std::size_t>(i)] =
        log_spaced ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo);
  }
  v.back() = hi;
  return v;
}

SweepReport run_lengthscale_sweep(const Dataset& d, const std::vector<double>& lengthscales,
                                  const Hyperparameters& h_base, const KernelSpec& spec) {
  if (lengthscales.empty()) throw InputError("sweep grid is empty");
  for (std::size_t i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) throw InputError("sweep lengthscales must be positive");
    if (i > 0 && !(lengthscales[i] > lengthscales[i - 1])) throw InputError("sweep grid must be strictly increasing");
  }
  SweepReport r;
  for (double ell : lengthscales) {
    Hyperparameters h = h_base;
    h.log_lengthscale = std::log(ell);
    SweepRow row;
    row.lengthscale = ell;
    row.lml = log_marginal_likelihood(d, h, spec);
    const SpectrumDiagnostics s = spectrum_diagnostics(noisy_covariance(d, h, spec));
    row.logdet = s.logdet;
    row.effective_rank = s.effective_rank;
    row.mean_abs_offdiag_corr = s.mean_abs_offdiag_corr;
    r.rows.push_back(row);
  }
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    if (r.rows[i].lml.total > r.rows[r.argmax_row].lml.total) r.argmax_row = i;
  }
  return r;
}

namespace {

ArmRecord train_arm(ObjectiveKind kind, const Dataset& train, const Dataset& test, const Hyperparameters& init,
                    const ComparisonConfig& cfg, Index clml_m) {
  const KernelSpec spec{KernelFamily::deep_rbf};
  ArmRecord rec;
  rec.objective = kind;
  try {
    ClmlConfig clml;
    clml.m = clml_m;
    clml.permutations = cfg.clml_permutations;
    clml.seed = cfg.seed;
    const Objective obj(kind, train, spec, clml, cfg.weight_decay);
    OptConfig oc;
    oc.max_iters = cfg.max_iters;
    oc.grad_tol = cfg.grad_tol;
    const OptTrace trace = optimize(obj, init, oc);
    const Hyperparameters& h =
        kind == ObjectiveKind::profiled_lml
            ? with_signal_var(trace.final, profiled_signal_variance(train, trace.final, spec))
            : trace.final;

    rec.iterations = static_cast<int>(trace.iterations.size()) - 1;
    rec.reason = trace.reason;
    rec.converged = trace.converged;
    rec.final_objective = trace.iterations.back().value;
    rec.lengthscale = h.lengthscale();
    rec.signal_var = h.signal_var();
    rec.noise_variance = h.noise_variance();
    rec.weight_norm = h.net ? h.net->flat().norm() : 0.0;
    rec.train_lml = log_marginal_likelihood(train, h, spec);

    const Posterior post = posterior_predict(train, h, spec, test.X());
    const Vector resid = test.y() - post.mean;
    rec.test_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(test.size()));
    double nlpd = 0.0;
    for (Index i = 0; i < test.size(); ++i) {
      const double v = post.variance(i);
      nlpd += 0.5 * std::log(2.0 * std::numbers::pi * v) + resid(i) * resid(i) / (2.0 * v);
    }
    rec.test_nlpd = nlpd / static_cast<double>(test.size());

    rec.kernel_corr = mean_abs_offdiag_correlation(kernel_matrix(train.X(), h, spec));
    const SpectrumDiagnostics s = spectrum_diagnostics(noisy_covariance(train, h, spec));
    rec.covariance_corr = s.mean_abs_offdiag_corr;
    rec.effective_rank = s.effective_rank;
    const double metrics[] = {rec.final_objective, rec.train_lml.total, rec.test_rmse, rec.test_nlpd,
                              rec.kernel_corr,     rec.covariance_corr, rec.effective_rank};
    for (double m : metrics) {
      if (!std::isfinite(m)) throw NonFiniteValue("non-finite metric");
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

ComparisonReport run_dkl_comparison(const ComparisonConfig& cfg) {
  if (cfg.n < 2) throw InputError("comparison needs n >= 2");
  if (cfg.objectives.empty()) throw InputError("comparison needs at least one objective");
  ComparisonReport report;
  report.config = cfg;

  const Dataset all = generate_synthetic(cfg.kind, cfg.n, cfg.noise_sd, cfg.seed, cfg.generator);
  Rng split_rng(cfg.seed, 4);
  const std::vector<Index> perm = random_permutation(cfg.n, split_rng);
  report.n_train = std::min<Index>((8 * cfg.n + 9) / 10, cfg.n - 1);
  report.n_test = cfg.n - report.n_train;
  const Dataset train = all.subset({perm.begin(), perm.begin() + report.n_train});
  const Dataset test = all.subset({perm.begin() + report.n_train, perm.end()});
  report.clml_m = cfg.clml_m >= 0 ? cfg.clml_m : (8 * report.n_train + 9) / 10;
  if (report.clml_m > report.n_train) throw InputError("clml conditioning size exceeds the training set");

  const NetSpec net = NetSpec::mlp(cfg.generator.dim, cfg.hidden, cfg.feature_dim);
  const KernelSpec spec{KernelFamily::deep_rbf};
  const Hyperparameters init = initial_hyperparameters(train, spec, NoiseMode::absolute, net, cfg.seed);
  for (ObjectiveKind kind : cfg.objectives) {
    Hyperparameters start = init;
    if (kind == ObjectiveKind::profiled_lml) {
      start.noise_mode = NoiseMode::ratio;
      start.log_noise = std::log(0.1);
    }
    report.arms.push_back(train_arm(kind, train, test, start, cfg, report.clml_m));
  }
  return report;
}

IdentityInstance random_identity_instance(Seed seed, Index index) {
  Rng rng(seed, 0x1000 + static_cast<std::uint64_t>(index));
  const Index n = 2 + static_cast<Index>(rng.below(49));
  const Index dim = 1 + static_cast<Index>(rng.below(2));
  Matrix X(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) X(i, j) = rng.uniform(0.0, 5.0);
  const double scale = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));

  IdentityInstance inst{Dataset(std::move(X), Vector::Zero(n)), Hyperparameters{}, KernelSpec{}};
  Hyperparameters& h = inst.h_hat;
  h.noise_mode = NoiseMode::ratio;
  h.log_lengthscale = rng.uniform(std::log(0.2), std::log(3.0));
  h.log_signal_var = 2.0 * std::log(scale) + rng.uniform(std::log(0.1), std::log(10.0));
  h.log_noise = rng.uniform(std::log(1e-3), std::log(0.5));
  if (index % 2 == 1) {
    inst.spec.family = KernelFamily::deep_rbf;
    h.net = net_init(NetSpec::mlp(static_cast<int>(dim), {8}, 2), Seed{rng()});
  }
  Hyperparameters prior = h;
  prior.log_signal_var = 2.0 * std::log(scale);
  const CholFactor chol = cholesky_with_jitter(noisy_covariance(inst.data, prior, inst.spec));
  inst.data = Dataset(inst.data.X(), mvn_sample(Vector::Zero(n), chol, Seed{rng()}));
  return inst;
}

bool IdentityReport::passed() const {
  return max_equivalence_residual <= tolerance && max_data_fit_residual <= tolerance &&
         max_split_residual <= tolerance && max_stationarity_gradient <= tolerance && all_maximal;
}

IdentityReport verify_profiled_identities(const std::vector<IdentityInstance>& instances, double tolerance) {
  IdentityReport r;
  r.tolerance = tolerance;
  for (const IdentityInstance& inst : instances) {
    IdentityCheck c;
    c.n = inst.data.size();
    c.family = inst.spec.family;
    const ProfiledResult p = profiled_objective(inst.data, inst.h_hat, inst.spec);
    c.equivalence_residual = p.equivalence_residual / std::max(1.0, std::abs(p.profiled_total));
    c.data_fit_residual = std::abs(p.induced.data_fit + 0.5 * static_cast<double>(c.n));
    const LogdetSplit s = logdet_split(inst.data, inst.h_hat, inst.spec);
    c.split_residual = s.residual() / std::max(1.0, std::abs(s.lhs));
    const StationarityReport st = verify_stationarity(inst.data, inst.h_hat, inst.spec, tolerance);
    c.stationarity_gradient = std::abs(st.gradient);
    c.maximal = st.maximal;

    r.max_equivalence_residual = std::max(r.max_equivalence_residual, c.equivalence_residual);
    r.max_data_fit_residual = std::max(r.max_data_fit_residual, c.data_fit_residual);
    r.max_split_residual = std::max(r.max_split_residual, c.split_residual);
    r.max_stationarity_gradient = std::max(r.max_stationarity_gradient, c.stationarity_gradient);
    r.all_maximal = r.all_maximal && c.maximal;
    r.checks.push_back(c);
  }
  return r;
}

}  // namespace mllab
