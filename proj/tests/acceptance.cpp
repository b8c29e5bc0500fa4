// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "support.hpp"

#include "mllab/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<IdentityInstance> identity_suite() {
  std::vector<IdentityInstance> v;
  for (Index i = 0; i < 50; ++i) v.push_back(random_identity_instance(Seed{7}, i));
  return v;
}

Outcome profiled_equivalence() {
  double eq = 0.0;
  double fit = 0.0;
  int deep = 0;
  for (const IdentityInstance& inst : identity_suite()) {
    const ProfiledResult r = profiled_objective(inst.data, inst.h_hat, inst.spec);
    eq = std::max(eq, r.equivalence_residual / std::max(1.0, std::abs(r.profiled_total)));
    fit = std::max(fit, std::abs(r.induced.data_fit + 0.5 * static_cast<double>(inst.data.size())));
    deep += inst.spec.family == KernelFamily::deep_rbf;
  }
  return {eq <= 1e-8 && fit <= 1e-8 && deep > 0 && deep < 50,
          "50 instances (" + std::to_string(deep) + " deep); max relative equivalence residual " + sci(eq) +
              ", max |data fit + N/2| " + sci(fit)};
}

Outcome logdet_split_identity() {
  double worst = 0.0;
  for (const IdentityInstance& inst : identity_suite()) {
    worst = std::max(worst, logdet_split(inst.data, inst.h_hat, inst.spec).residual());
  }
  return {worst <= 1e-8, "max split residual " + sci(worst)};
}

Outcome stationarity() {
  double worst = 0.0;
  int maximal = 0;
  for (const IdentityInstance& inst : identity_suite()) {
    const StationarityReport s = verify_stationarity(inst.data, inst.h_hat, inst.spec);
    worst = std::max(worst, std::abs(s.gradient));
    maximal += s.maximal;
  }
  return {worst <= 1e-8 && maximal == 50,
          "max |dLML/dlog s_f^2| " + sci(worst) + ", strict maximum on " + std::to_string(maximal) + "/50"};
}

// Full LML maximized over log s_f^2 by golden section; the objective is concave in log s_f^2.
double lml_maximized_over_signal(const Dataset& d, Hyperparameters h) {
  auto f = [&](double u) {
    h.log_signal_var = u;
    return log_marginal_likelihood(d, h, KernelSpec{}).total;
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -30.0;
  double b = 30.0;
  double c = b - g * (b - a);
  double e = a + g * (b - a);
  double fc = f(c);
  double fe = f(e);
  while (b - a > 1e-10) {
    if (fc > fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + g * (b - a);
      fe = f(e);
    }
  }
  return f(0.5 * (a + b));
}

Outcome reintroduced_data_fit() {
  double smallest_sensitivity = std::numeric_limits<double>::infinity();
  int agree = 0;
  std::string mismatch;
  const std::vector<double> grid = GridSpec::parse("0.05:50:log:25").values();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dataset d = generate_synthetic(SyntheticKind::gp_sample, 40, 0.1, Seed{100 + s});
    Hyperparameters h = rbf_params(1.0, 1.0, 0.01, NoiseMode::ratio);
    smallest_sensitivity =
        std::min(smallest_sensitivity,
                 std::abs(sensitivity_of_profiled_amplitude(d, h, KernelSpec{})(Hyperparameters::kLengthscale)));

    std::size_t best_profiled = 0;
    std::size_t best_full = 0;
    double vp = -std::numeric_limits<double>::infinity();
    double vf = vp;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      h.log_lengthscale = std::log(grid[i]);
      const double p = profiled_objective(d, h, KernelSpec{}).profiled_total;
      const double f = lml_maximized_over_signal(d, h);
      if (p > vp) {
        vp = p;
        best_profiled = i;
      }
      if (f > vf) {
        vf = f;
        best_full = i;
      }
    }
    if (best_profiled == best_full) {
      ++agree;
    } else {
      mismatch += " seed " + std::to_string(100 + s);
    }
  }
  return {smallest_sensitivity > 1e-12 && agree == 10,
          "min |d log s_hat^2 / d log l| " + sci(smallest_sensitivity) + ", grid argmax agreement " +
              std::to_string(agree) + "/10" + mismatch};
}

Outcome logdet_eigen_consistency() {
  double worst = 0.0;
  int count = 0;
  auto check = [&](const SymMatrix& A) {
    double s = 0.0;
    for (double e : sym_eigenvalues(A)) s += std::log(e);
    worst = std::max(worst, std::abs(logdet(cholesky_with_jitter(A)) - s));
    ++count;
  };
  for (const IdentityInstance& inst : identity_suite()) check(noisy_covariance(inst.data, inst.h_hat, inst.spec));
  Rng rng(Seed{5});
  for (int k = 0; k < 30; ++k) check(SymMatrix(random_spd(1 + static_cast<Index>(rng.below(40)), rng, 0.05)));
  return {worst <= 1e-6, std::to_string(count) + " PD matrices; max |logdet - sum log eig| " + sci(worst)};
}

Outcome lengthscale_behaviour() {
  int in_range = 0;
  int penalty_prefers_long = 0;
  int total_prefers_short = 0;
  std::string ells;
  for (std::uint64_t s = 0; s < 10; ++s) {
    RunConfig c;
    c.command = "fit";
    c.n = 100;
    c.noise_sd = 0.1;
    c.seed = s;
    const CommandOutput o = execute(c);
    const Json& fh = o.report["result"]["final_hyperparameters"];
    const double ell = fh["lengthscale"].get<double>();
    in_range += ell >= 0.5 && ell <= 2.0;
    ells += (s ? " " : "") + sci(ell);

    const Dataset d = generate_synthetic(SyntheticKind::gp_sample, 100, 0.1, Seed{s});
    Hyperparameters h = rbf_params(1.0, fh["signal_var"].get<double>(), fh["noise_variance"].get<double>());
    const double far = 100.0 * max_pairwise_distance(d.X());
    const SweepReport r = run_lengthscale_sweep(d, {1.0, far}, h, KernelSpec{});
    penalty_prefers_long += r.rows[1].lml.complexity > r.rows[0].lml.complexity;
    total_prefers_short += r.rows[0].lml.total > r.rows[1].lml.total;
  }
  return {in_range >= 9 && penalty_prefers_long == 10,
          "l in [0.5, 2] on " + std::to_string(in_range) + "/10 (" + ells + "); penalty better at 100 x max distance on " +
              std::to_string(penalty_prefers_long) + "/10, total better at l = 1 on " +
              std::to_string(total_prefers_short) + "/10"};
}

Outcome gradient_checks() {
  double hyper = 0.0;
  double weights = 0.0;
  int checks = 0;
  for (ObjectiveKind kind : {ObjectiveKind::lml, ObjectiveKind::profiled_lml, ObjectiveKind::clml}) {
    for (Index i = 0; i < 20; ++i) {
      const IdentityInstance inst = random_identity_instance(Seed{11}, i);
      const Objective obj(kind, inst.data, inst.spec, ClmlConfig::defaults(inst.data.size(), Seed{11}));
      const GradientCheck c = gradient_check_detail(obj, inst.h_hat, 1e-6);
      hyper = std::max(hyper, c.max_error_hyper);
      weights = std::max(weights, c.max_error_weights);
      ++checks;
    }
  }
  return {hyper <= 1e-5 && weights <= 1e-3, std::to_string(checks) + " checks; max relative error " + sci(hyper) +
                                                 " on kernel hyperparameters, " + sci(weights) + " on network weights"};
}

Outcome clml_chain() {
  double worst = 0.0;
  bool empty_zero = true;
  bool none_full = true;
  for (Index i = 0; i < 20; ++i) {
    const IdentityInstance inst = random_identity_instance(Seed{13}, i);
    const Index n = inst.data.size();
    ClmlConfig c = ClmlConfig::defaults(n, Seed{13});
    c.m = n > 2 ? (8 * n + 9) / 10 - 1 : 1;
    const Objective obj(ObjectiveKind::clml, inst.data, inst.spec, c);
    const double diff = eval_objective(obj, inst.h_hat).value;
    worst = std::max(worst, std::abs(diff - clml_direct(obj, inst.h_hat)) / std::max(1.0, std::abs(diff)));

    c.m = n;
    const Objective all(ObjectiveKind::clml, inst.data, inst.spec, c);
    empty_zero = empty_zero && eval_objective(all, inst.h_hat).value == 0.0 && clml_direct(all, inst.h_hat) == 0.0;
    c.m = 0;
    const Objective none(ObjectiveKind::clml, inst.data, inst.spec, c);
    const double full = log_marginal_likelihood(inst.data, inst.h_hat, inst.spec).total;
    none_full = none_full && eval_objective(none, inst.h_hat).value == full &&
                std::abs(clml_direct(none, inst.h_hat) - full) <= 1e-8 * std::max(1.0, std::abs(full));
  }
  return {worst <= 1e-8 && empty_zero && none_full,
          "20 instances; max relative gap " + sci(worst) + (empty_zero ? ", m = N gives 0" : ", m = N NOT 0") +
              (none_full ? ", m = 0 gives the full LML" : ", m = 0 differs from the LML")};
}

Outcome dkl_comparison() {
  int complete = 0;
  int reproducible = 0;
  int arms_ok = 0;
  int arms = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    RunConfig c;
    c.command = "compare";
    c.n = 30;
    c.seed = s;
    const CommandOutput a = execute(c);
    const CommandOutput b = execute(c);
    reproducible += report_body(a.report) == report_body(b.report);
    bool all = a.exit_code == 0;
    for (const Json& arm : a.report["result"]["runs"][0]["arms"]) {
      ++arms;
      const bool ok = arm["status"] == "ok" && arm.contains("kernel_mean_abs_offdiag_corr") &&
                      arm.contains("covariance_mean_abs_offdiag_corr") && arm["test_rmse"].is_number() &&
                      arm["test_nlpd"].is_number();
      arms_ok += ok;
      all = all && ok;
    }
    complete += all;
  }
  return {complete == 10 && reproducible == 10,
          "seeds completed " + std::to_string(complete) + "/10, arms finite " + std::to_string(arms_ok) + "/" +
              std::to_string(arms) + ", byte-identical bodies " + std::to_string(reproducible) + "/10"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mllab");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  std::streambuf* old = std::cout.rdbuf();
  std::ostringstream sink;
  std::cout.rdbuf(sink.rdbuf());
  const int code = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

Outcome cli_round_trip() {
  const fs::path dir = fs::temp_directory_path() / "mllab_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::vector<std::string>> commands{
      {"fit", "--n", "40", "--seed", "2"},
      {"fit", "--n", "30", "--seed", "3", "--kernel", "deep_rbf", "--hidden", "4", "--objective", "clml",
       "--max-iters", "40"},
      {"fit", "--n", "30", "--seed", "6", "--objective", "profiled_lml"},
      {"sweep", "--n", "50", "--seed", "1"},
      {"compare", "--n", "20", "--seed", "4", "--max-iters", "20", "--replicates", "2"},
      {"verify", "--random", "10", "--seed", "9"},
      {"gradcheck", "--random", "6", "--objective", "clml"}};
  int same = 0;
  std::string failed;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const fs::path a = dir / ("run" + std::to_string(i) + ".json");
    const fs::path b = dir / ("rerun" + std::to_string(i) + ".json");
    std::vector<std::string> args = commands[i];
    args.push_back("--out");
    args.push_back(a.string());
    const int first = run_cli(args);
    const int second = run_cli({"rerun", "--report", a.string(), "--out", b.string()});
    bool ok = first == 0 && second == 0 &&
              report_body(Json::parse(slurp(a))) == report_body(Json::parse(slurp(b)));
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      const std::string prefix = "run" + std::to_string(i) + ".";
      if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ".csv") {
        ok = ok && slurp(entry.path()) == slurp(dir / ("re" + name));
      }
    }
    if (ok) {
      ++same;
    } else {
      failed += " " + commands[i][0];
    }
  }
  return {same == static_cast<int>(commands.size()),
          std::to_string(same) + "/" + std::to_string(commands.size()) + " reports re-run byte-identically" + failed};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"profiled objective equals the LML at the induced parameters", profiled_equivalence},
      {"log-determinant split identity", logdet_split_identity},
      {"closed-form amplitude is a stationary strict maximum", stationarity},
      {"profiled amplitude re-introduces a data-fit term", reintroduced_data_fit},
      {"logdet equals the sum of log eigenvalues", logdet_eigen_consistency},
      {"learned lengthscales stay moderate while the penalty prefers long ones", lengthscale_behaviour},
      {"analytic gradients match central differences", gradient_checks},
      {"conditional LML chain identity", clml_chain},
      {"deep kernel comparison harness completes reproducibly", dkl_comparison},
      {"reports re-run from their embedded config", cli_round_trip}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("criterion %2zu %s  %s: %s [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
