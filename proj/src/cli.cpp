#include "mllab/cli.hpp"

#include "mllab/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mllab {

namespace {

constexpr const char* kVersion = "0.1.0";

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

Json RunConfig::to_json() const {
  Json j;
  j["command"] = command;
  j["data_path"] = data_path;
  j["generator"] = generator;
  j["n"] = n;
  j["noise_sd"] = noise_sd;
  j["gen_lengthscale"] = gen_lengthscale;
  j["gen_signal_var"] = gen_signal_var;
  j["gen_dim"] = gen_dim;
  j["kernel"] = kernel;
  j["hidden"] = hidden;
  j["feature_dim"] = feature_dim;
  j["noise_mode"] = noise_mode;
  j["init_lengthscale"] = optional_json(init_lengthscale);
  j["init_signal_var"] = optional_json(init_signal_var);
  j["init_noise"] = optional_json(init_noise);
  j["fix"] = fix;
  j["objective"] = objective;
  j["objectives"] = objectives;
  j["max_iters"] = max_iters;
  j["grad_tol"] = grad_tol;
  j["clml_m"] = optional_json(clml_m);
  j["clml_permutations"] = clml_permutations;
  j["weight_decay"] = weight_decay;
  j["grid"] = grid;
  j["grid_units"] = grid_units;
  j["random_instances"] = random_instances;
  j["tolerance"] = tolerance;
  j["fd_step"] = fd_step;
  j["gradcheck_tol"] = gradcheck_tol;
  j["gradcheck_weight_tol"] = gradcheck_weight_tol;
  j["replicates"] = replicates;
  j["seed"] = seed;
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  try {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.data_path = j.at("data_path").get<std::string>();
    c.generator = j.at("generator").get<std::string>();
    c.n = j.at("n").get<Index>();
    c.noise_sd = j.at("noise_sd").get<double>();
    c.gen_lengthscale = j.at("gen_lengthscale").get<double>();
    c.gen_signal_var = j.at("gen_signal_var").get<double>();
    c.gen_dim = j.at("gen_dim").get<int>();
    c.kernel = j.at("kernel").get<std::string>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.noise_mode = j.at("noise_mode").get<std::string>();
    c.init_lengthscale = optional_from<double>(j, "init_lengthscale");
    c.init_signal_var = optional_from<double>(j, "init_signal_var");
    c.init_noise = optional_from<double>(j, "init_noise");
    c.fix = j.at("fix").get<std::vector<std::string>>();
    c.objective = j.at("objective").get<std::string>();
    c.objectives = j.at("objectives").get<std::vector<std::string>>();
    c.max_iters = j.at("max_iters").get<int>();
    c.grad_tol = j.at("grad_tol").get<double>();
    c.clml_m = optional_from<Index>(j, "clml_m");
    c.clml_permutations = j.at("clml_permutations").get<Index>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.grid = j.at("grid").get<std::string>();
    c.grid_units = j.at("grid_units").get<std::string>();
    c.random_instances = j.at("random_instances").get<int>();
    c.tolerance = j.at("tolerance").get<double>();
    c.fd_step = j.at("fd_step").get<double>();
    c.gradcheck_tol = j.at("gradcheck_tol").get<double>();
    c.gradcheck_weight_tol = j.at("gradcheck_weight_tol").get<double>();
    c.replicates = j.at("replicates").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid run config: ") + e.what());
  }
}

Dataset ingest_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };

  std::string line;
  std::size_t row = 0;
  std::size_t columns = 0;
  std::vector<std::vector<double>> values;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (columns == 0) {
      if (cells.size() < 2) throw ParseError(row, 1, "header needs at least two columns");
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) {
      throw ParseError(row, std::min(cells.size(), columns) + 1,
                       "expected " + std::to_string(columns) + " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> parsed(columns);
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string cell = trim(cells[c]);
      char* end = nullptr;
      const double v = cell.empty() ? 0.0 : std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw ParseError(row, c + 1, "'" + cell + "' is not a number");
      }
      if (!std::isfinite(v)) {
        throw NonFiniteValue("non-finite value at row " + std::to_string(row) + ", column " + std::to_string(c + 1));
      }
      parsed[c] = v;
    }
    values.push_back(std::move(parsed));
  }
  if (columns == 0) throw EmptyFile("'" + path + "' is empty");
  if (values.empty()) throw EmptyFile("'" + path + "' has a header but no data rows");

  const auto n = static_cast<Index>(values.size());
  const auto d = static_cast<Index>(columns - 1);
  Matrix X(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) X(i, j) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y(i) = values[static_cast<std::size_t>(i)].back();
  }
  return Dataset(std::move(X), std::move(y));
}

namespace {

bool fixed(const RunConfig& cfg, const std::string& name) {
  return std::find(cfg.fix.begin(), cfg.fix.end(), name) != cfg.fix.end();
}

void validate(const RunConfig& cfg) {
  static const std::vector<std::string> commands{"fit", "sweep", "compare", "verify", "gradcheck"};
  if (std::find(commands.begin(), commands.end(), cfg.command) == commands.end()) {
    throw InputError("unknown command '" + cfg.command + "'");
  }
  for (const std::string& f : cfg.fix) {
    if (f != "lengthscale" && f != "signal_var" && f != "noise" && f != "net") {
      throw InputError("--fix accepts lengthscale, signal_var, noise, net; got '" + f + "'");
    }
  }
  if (cfg.max_iters < 0) throw InputError("--max-iters must be >= 0");
  if (!(cfg.grad_tol >= 0.0)) throw InputError("--grad-tol must be >= 0");
  if (cfg.replicates < 1) throw InputError("--replicates must be >= 1");
  if (cfg.random_instances < 0) throw InputError("--random must be >= 0");
  if (!(cfg.fd_step > 0.0)) throw InputError("--fd-step must be > 0");
  if (cfg.feature_dim < 1) throw InputError("--feature-dim must be >= 1");
  if (cfg.grid_units != "median" && cfg.grid_units != "absolute") {
    throw InputError("--grid-units must be 'median' or 'absolute'");
  }
  kernel_family_from_string(cfg.kernel);
  noise_mode_from_string(cfg.noise_mode);
  objective_kind_from_string(cfg.objective);
  synthetic_kind_from_string(cfg.generator);
}

Dataset load_data(const RunConfig& cfg) {
  if (!cfg.data_path.empty()) return ingest_csv(cfg.data_path);
  GeneratorParams p;
  p.lengthscale = cfg.gen_lengthscale;
  p.signal_var = cfg.gen_signal_var;
  p.dim = cfg.gen_dim;
  return generate_synthetic(synthetic_kind_from_string(cfg.generator), cfg.n, cfg.noise_sd, Seed{cfg.seed}, p);
}

NoiseMode effective_noise_mode(const RunConfig& cfg) {
  // The profiled objective is defined on the noise-to-signal ratio.
  if (cfg.command != "compare" && objective_kind_from_string(cfg.objective) == ObjectiveKind::profiled_lml) {
    return NoiseMode::ratio;
  }
  return noise_mode_from_string(cfg.noise_mode);
}

Hyperparameters make_init(const RunConfig& cfg, const Dataset& d, const KernelSpec& spec) {
  std::optional<NetSpec> net;
  if (spec.family == KernelFamily::deep_rbf) net = NetSpec::mlp(static_cast<int>(d.dim()), cfg.hidden, cfg.feature_dim);
  Hyperparameters h = initial_hyperparameters(d, spec, effective_noise_mode(cfg), net, Seed{cfg.seed});
  if (cfg.init_lengthscale) {
    if (!(*cfg.init_lengthscale > 0.0)) throw InputError("--lengthscale must be > 0");
    h.log_lengthscale = std::log(*cfg.init_lengthscale);
  }
  if (cfg.init_signal_var) {
    if (!(*cfg.init_signal_var > 0.0)) throw InputError("--signal-var must be > 0");
    h.log_signal_var = std::log(*cfg.init_signal_var);
  }
  if (cfg.init_noise) {
    if (!(*cfg.init_noise >= 0.0)) throw InputError("--noise must be >= 0");
    if (*cfg.init_noise == 0.0 && !fixed(cfg, "noise")) throw InputError("--noise 0 requires --fix noise");
    h.log_noise = std::log(*cfg.init_noise);
  }
  h.validate();
  return h;
}

Json train_metrics(const Dataset& d, const Hyperparameters& h, const KernelSpec& spec) {
  const Posterior post = posterior_predict(d, h, spec, d.X());
  const Vector r = d.y() - post.mean;
  Json j;
  j["rmse"] = finite_or_throw(std::sqrt(r.squaredNorm() / static_cast<double>(d.size())), "rmse");
  // With zero noise the predictive variance at a training input vanishes.
  if ((post.variance.array() <= 0.0).any()) {
    j["mean_nlpd"] = nullptr;
    return j;
  }
  double nlpd = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    nlpd += 0.5 * std::log(2.0 * std::numbers::pi * post.variance(i)) + r(i) * r(i) / (2.0 * post.variance(i));
  }
  j["mean_nlpd"] = finite_or_throw(nlpd / static_cast<double>(d.size()), "mean_nlpd");
  return j;
}

Json dataset_json(const RunConfig& cfg, const Dataset& d) {
  Json j;
  j["source"] = cfg.data_path.empty() ? "generator:" + cfg.generator : "csv";
  j["n"] = d.size();
  j["dim"] = d.dim();
  return j;
}

Objective make_objective(const RunConfig& cfg, const Dataset& d, const KernelSpec& spec) {
  const ObjectiveKind kind = objective_kind_from_string(cfg.objective);
  ClmlConfig clml = ClmlConfig::defaults(d.size(), Seed{cfg.seed});
  if (cfg.clml_m) clml.m = *cfg.clml_m;
  clml.permutations = cfg.clml_permutations;
  return Objective(kind, d, spec, clml, cfg.weight_decay);
}

CommandOutput run_fit(const RunConfig& cfg) {
  const Dataset d = load_data(cfg);
  const KernelSpec spec{kernel_family_from_string(cfg.kernel)};
  const Hyperparameters init = make_init(cfg, d, spec);
  const Objective obj = make_objective(cfg, d, spec);
  OptConfig oc;
  oc.max_iters = cfg.max_iters;
  oc.grad_tol = cfg.grad_tol;
  oc.fixed = fixed_mask(init, fixed(cfg, "lengthscale"), fixed(cfg, "signal_var"), fixed(cfg, "noise"),
                        fixed(cfg, "net"));
  const OptTrace trace = optimize(obj, init, oc);

  Json result;
  result["dataset"] = dataset_json(cfg, d);
  result["objective"] = to_string(obj.kind());
  result["initial_hyperparameters"] = to_json(init);
  result["trace"] = trace_summary(trace);
  Hyperparameters final = trace.final;
  if (obj.kind() == ObjectiveKind::profiled_lml) {
    const ProfiledResult p = profiled_objective(d, trace.final, spec);
    result["profiled"] = to_json(p);
    final = with_signal_var(trace.final, p.sigma_f_hat_sq);
  }
  if (obj.kind() == ObjectiveKind::clml) {
    result["clml"] = {{"m", obj.clml().m}, {"permutations", obj.permutations().size()}};
  }
  result["final_hyperparameters"] = to_json(final, true);
  result["final_objective"] = finite_or_throw(trace.iterations.back().value, "final_objective");
  result["lml"] = to_json(log_marginal_likelihood(d, final, spec));
  result["train_metrics"] = train_metrics(d, final, spec);
  return {0, Json{{"result", result}}, {trace_table(trace)}};
}

CommandOutput run_sweep(const RunConfig& cfg) {
  const Dataset d = load_data(cfg);
  const KernelSpec spec{kernel_family_from_string(cfg.kernel)};
  const Hyperparameters base = make_init(cfg, d, spec);
  const Matrix features = kernel_features(d.X(), base, spec);
  const double med = median_pairwise_distance(features);
  const double maxd = max_pairwise_distance(features);
  const GridSpec grid = GridSpec::parse(cfg.grid);
  std::vector<double> ells = grid.values();
  if (cfg.grid_units == "median") {
    if (!(med > 0.0)) throw InputError("median pairwise distance is zero; use --grid-units absolute");
    for (double& e : ells) e *= med;
  }
  const SweepReport sweep = run_lengthscale_sweep(d, ells, base, spec);

  Json result;
  result["dataset"] = dataset_json(cfg, d);
  result["median_pairwise_distance"] = med;
  result["max_pairwise_distance"] = maxd;
  result["grid"] = grid.to_string();
  result["fixed_hyperparameters"] = to_json(base);
  result["sweep"] = to_json(sweep);
  return {0, Json{{"result", result}}, {sweep_table(sweep)}};
}

CommandOutput run_compare(const RunConfig& cfg) {
  if (!cfg.data_path.empty()) throw InputError("compare generates its own data; --data is not supported");
  ComparisonConfig cc;
  cc.kind = synthetic_kind_from_string(cfg.generator);
  cc.n = cfg.n;
  cc.noise_sd = cfg.noise_sd;
  cc.generator.lengthscale = cfg.gen_lengthscale;
  cc.generator.signal_var = cfg.gen_signal_var;
  cc.generator.dim = cfg.gen_dim;
  cc.hidden = cfg.hidden;
  cc.feature_dim = cfg.feature_dim;
  cc.objectives.clear();
  for (const std::string& o : cfg.objectives) cc.objectives.push_back(objective_kind_from_string(o));
  cc.max_iters = cfg.max_iters;
  cc.grad_tol = cfg.grad_tol;
  cc.clml_m = cfg.clml_m.value_or(-1);
  cc.clml_permutations = cfg.clml_permutations;
  cc.weight_decay = cfg.weight_decay;

  std::vector<ComparisonReport> reports;
  Json runs = Json::array();
  for (int r = 0; r < cfg.replicates; ++r) {
    cc.seed = Seed{cfg.seed + static_cast<std::uint64_t>(r)};
    reports.push_back(run_dkl_comparison(cc));
    runs.push_back(to_json(reports.back()));
  }

  Json summary;
  for (ObjectiveKind kind : cc.objectives) {
    std::vector<double> rmse;
    std::vector<double> nlpd;
    int failed = 0;
    for (const ComparisonReport& rep : reports) {
      for (const ArmRecord& a : rep.arms) {
        if (a.objective != kind) continue;
        if (a.ok) {
          rmse.push_back(a.test_rmse);
          nlpd.push_back(a.test_nlpd);
        } else {
          ++failed;
        }
      }
    }
    auto median = [](std::vector<double> v) -> Json {
      if (v.empty()) return nullptr;
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size() / 2;
      return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    summary[to_string(kind)] = {{"completed", rmse.size()},
                                {"failed", failed},
                                {"median_test_rmse", median(rmse)},
                                {"median_test_nlpd", median(nlpd)}};
  }
  Json result;
  result["runs"] = runs;
  result["summary"] = summary;
  return {0, Json{{"result", result}}, {comparison_table(reports)}};
}

CommandOutput run_verify(const RunConfig& cfg) {
  std::vector<IdentityInstance> instances;
  Json result;
  if (cfg.random_instances > 0) {
    for (int i = 0; i < cfg.random_instances; ++i) instances.push_back(random_identity_instance(Seed{cfg.seed}, i));
    result["instances"] = {{"kind", "random"}, {"count", cfg.random_instances}};
  } else {
    const Dataset d = load_data(cfg);
    const KernelSpec spec{kernel_family_from_string(cfg.kernel)};
    RunConfig ratio = cfg;
    ratio.noise_mode = "ratio";
    if (!cfg.init_noise) ratio.init_noise = 0.1;
    instances.push_back({d, make_init(ratio, d, spec), spec});
    result["instances"] = {{"kind", "dataset"}, {"dataset", dataset_json(cfg, d)}};
  }
  const IdentityReport rep = verify_profiled_identities(instances, cfg.tolerance);
  result["identities"] = to_json(rep);
  return {rep.passed() ? 0 : 1, Json{{"result", result}}, {}};
}

CommandOutput run_gradcheck(const RunConfig& cfg) {
  struct Case {
    Dataset data;
    Hyperparameters h;
    KernelSpec spec;
  };
  std::vector<Case> cases;
  if (cfg.random_instances > 0) {
    for (int i = 0; i < cfg.random_instances; ++i) {
      IdentityInstance inst = random_identity_instance(Seed{cfg.seed}, i);
      cases.push_back({inst.data, inst.h_hat, inst.spec});
    }
  } else {
    const Dataset d = load_data(cfg);
    const KernelSpec spec{kernel_family_from_string(cfg.kernel)};
    cases.push_back({d, make_init(cfg, d, spec), spec});
  }
  Json checks = Json::array();
  double worst_hyper = 0.0;
  double worst_weights = 0.0;
  for (const Case& c : cases) {
    const Objective obj = make_objective(cfg, c.data, c.spec);
    const GradientCheck gc = gradient_check_detail(obj, c.h, cfg.fd_step);
    worst_hyper = std::max(worst_hyper, gc.max_error_hyper);
    worst_weights = std::max(worst_weights, gc.max_error_weights);
    Json j = to_json(gc);
    j["n"] = c.data.size();
    j["kernel"] = to_string(c.spec.family);
    checks.push_back(j);
  }
  const bool ok = worst_hyper <= cfg.gradcheck_tol && worst_weights <= cfg.gradcheck_weight_tol;
  Json result;
  result["objective"] = cfg.objective;
  result["max_error_hyper"] = worst_hyper;
  result["max_error_weights"] = worst_weights;
  result["passed"] = ok;
  result["checks"] = checks;
  return {ok ? 0 : 1, Json{{"result", result}}, {}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

CommandOutput execute(const RunConfig& cfg) {
  validate(cfg);
  CommandOutput out;
  if (cfg.command == "fit") {
    out = run_fit(cfg);
  } else if (cfg.command == "sweep") {
    out = run_sweep(cfg);
  } else if (cfg.command == "compare") {
    out = run_compare(cfg);
  } else if (cfg.command == "verify") {
    out = run_verify(cfg);
  } else {
    out = run_gradcheck(cfg);
  }
  Json report;
  report["metadata"] = {
      {"tool", "mllab"},
      {"version", kVersion},
      {"created_utc", utc_timestamp()},
      {"notes",
       {{"overcorrelation_metric",
         "mean |off-diagonal| of D^-1/2 C D^-1/2; one operationalization of input overcorrelation"},
        {"number_format", "JSON numbers use the shortest round-trip representation; CSV uses %.17g"}}}};
  report["config"] = cfg.to_json();
  report["status"] = out.exit_code == 0 ? "ok" : "verification_failed";
  report["result"] = out.report.at("result");
  out.report = std::move(report);
  return out;
}

std::string report_body(const Json& report) {
  Json body = report;
  body.erase("metadata");
  return body.dump(2);
}

int run_command(const RunConfig& cfg, const std::string& out_path, std::ostream& out, std::ostream& err) {
  CommandOutput result;
  try {
    result = execute(cfg);
  } catch (const InputError& e) {
    err << "mllab: input error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "mllab: " << e.what() << '\n';
    return 1;
  }

  if (out_path.empty()) {
    out << result.report.dump(2) << '\n';
  } else {
    namespace fs = std::filesystem;
    const fs::path path(out_path);
    result.report["metadata"]["output"] = path.string();
    std::ofstream f(path);
    if (!f) {
      err << "mllab: cannot write '" << out_path << "'\n";
      return 2;
    }
    f << result.report.dump(2) << '\n';
    const fs::path stem = path.parent_path() / path.stem();
    for (const CsvTable& t : result.tables) {
      std::ofstream csv(stem.string() + "." + t.name + ".csv");
      csv << t.to_csv();
    }
  }
  if (result.exit_code != 0) err << "mllab: verification failed\n";
  return result.exit_code;
}

namespace {

void add_run_options(CLI::App* sub, RunConfig& cfg, std::string& out, std::vector<std::function<void()>>& post) {
  sub->add_option("--out", out, "Report path; CSV side-files are written next to it");
  sub->add_option("--seed", cfg.seed, "Seed for data, initialization and CLML permutations");
  sub->add_option("--data", cfg.data_path, "CSV file (header row, last column is the target)");
  sub->add_option("--generator", cfg.generator, "gp_sample | sine | step, used without --data");
  sub->add_option("--n", cfg.n, "Generated dataset size");
  sub->add_option("--noise-sd", cfg.noise_sd, "Generated observation noise standard deviation");
  sub->add_option("--gen-lengthscale", cfg.gen_lengthscale, "gp_sample prior lengthscale");
  sub->add_option("--gen-signal-var", cfg.gen_signal_var, "gp_sample prior signal variance");
  sub->add_option("--gen-dim", cfg.gen_dim, "Generated input dimension");
  sub->add_option("--kernel", cfg.kernel, "rbf | deep_rbf");
  sub->add_option("--hidden", cfg.hidden, "Hidden layer widths of the feature network")->delimiter(',');
  sub->add_option("--feature-dim", cfg.feature_dim, "Feature network output width");
  sub->add_option("--noise-mode", cfg.noise_mode, "absolute | ratio (profiled_lml always uses ratio)");
  sub->add_option("--fix", cfg.fix, "Frozen parameters: lengthscale,signal_var,noise,net")->delimiter(',');
  sub->add_option("--objective", cfg.objective, "lml | profiled_lml | clml");
  sub->add_option("--objectives", cfg.objectives, "Objectives compared by `compare`")->delimiter(',');
  sub->add_option("--max-iters", cfg.max_iters, "Optimizer iteration budget");
  sub->add_option("--grad-tol", cfg.grad_tol, "Stop when the gradient max-norm falls below this");
  sub->add_option("--clml-perms", cfg.clml_permutations, "CLML permutation count");
  sub->add_option("--weight-decay", cfg.weight_decay, "L2 penalty on network weights");
  sub->add_option("--grid", cfg.grid, "Sweep grid lo:hi:log:count (or lin)");
  sub->add_option("--grid-units", cfg.grid_units, "median (multiples of the median distance) | absolute");
  sub->add_option("--random", cfg.random_instances, "Use this many seeded random instances");
  sub->add_option("--tol", cfg.tolerance, "Identity tolerance for verify");
  sub->add_option("--fd-step", cfg.fd_step, "Central-difference step for gradcheck");
  sub->add_option("--gradcheck-tol", cfg.gradcheck_tol, "Allowed relative error on kernel hyperparameters");
  sub->add_option("--gradcheck-weight-tol", cfg.gradcheck_weight_tol, "Allowed relative error on network weights");
  sub->add_option("--replicates", cfg.replicates, "compare: run seeds seed .. seed + replicates - 1");

  auto* ell = sub->add_option("--lengthscale", "Initial lengthscale");
  auto* sig = sub->add_option("--signal-var", "Initial signal variance");
  auto* noise = sub->add_option("--noise", "Initial noise variance (ratio in ratio mode)");
  auto* m = sub->add_option("--clml-m", "CLML conditioning-set size (default ceil(0.8 N))");
  post.push_back([ell, sig, noise, m, &cfg] {
    if (ell->count()) cfg.init_lengthscale = ell->as<double>();
    if (sig->count()) cfg.init_signal_var = sig->as<double>();
    if (noise->count()) cfg.init_noise = noise->as<double>();
    if (m->count()) cfg.clml_m = m->as<Index>();
  });
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Exact GP marginal-likelihood lab"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string out;
  std::string report_path;
  std::vector<std::function<void()>> post;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"fit", "Optimize an objective and report the trace and final breakdown"},
      {"sweep", "Evaluate the LML terms over a lengthscale grid"},
      {"compare", "Train a deep kernel under LML and CLML and compare test metrics"},
      {"verify", "Check the profiled-likelihood identities"},
      {"gradcheck", "Compare analytic gradients with central differences"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_run_options(sub, cfg, out, post);
    sub->callback([&cfg, name = name] { cfg.command = name; });
  }
  CLI::App* rerun = app.add_subcommand("rerun", "Re-run the config embedded in a report");
  rerun->add_option("--report", report_path, "Report to re-run")->required();
  rerun->add_option("--out", out, "Where to write the new report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (auto& f : post) f();

  if (rerun->parsed()) {
    std::ifstream in(report_path);
    if (!in) {
      std::cerr << "mllab: input error: cannot open '" << report_path << "'\n";
      return 2;
    }
    try {
      cfg = RunConfig::from_json(Json::parse(in).at("config"));
    } catch (const std::exception& e) {
      std::cerr << "mllab: input error: " << e.what() << '\n';
      return 2;
    }
  }
  return run_command(cfg, out, std::cout, std::cerr);
}

}  // namespace mllab
