#include "mllab/report.hpp"

#include "mllab/error.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mllab {

double finite_or_throw(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NonFiniteValue("non-finite value in report field '" + what + "'");
  return v;
}

#define MLLAB_NUM(obj, key, value) (obj)[key] = finite_or_throw((value), key)

Json to_json(const MLLBreakdown& b) {
  Json j;
  MLLAB_NUM(j, "data_fit", b.data_fit);
  MLLAB_NUM(j, "complexity", b.complexity);
  MLLAB_NUM(j, "constant", b.constant);
  MLLAB_NUM(j, "total", b.total);
  return j;
}

Json to_json(const ProfiledResult& r) {
  Json j;
  MLLAB_NUM(j, "sigma_f_hat_sq", r.sigma_f_hat_sq);
  MLLAB_NUM(j, "collapsed_data_fit", r.collapsed_data_fit);
  MLLAB_NUM(j, "term_data_refit", r.term_data_refit);
  MLLAB_NUM(j, "term_logdet_hat", r.term_logdet_hat);
  MLLAB_NUM(j, "constant", r.constant);
  MLLAB_NUM(j, "profiled_total", r.profiled_total);
  j["induced_lml"] = to_json(r.induced);
  MLLAB_NUM(j, "equivalence_residual", r.equivalence_residual);
  return j;
}

Json to_json(const Hyperparameters& h, bool include_weights) {
  Json j;
  MLLAB_NUM(j, "lengthscale", h.lengthscale());
  MLLAB_NUM(j, "signal_var", h.signal_var());
  MLLAB_NUM(j, "noise_variance", h.noise_variance());
  j["noise_mode"] = to_string(h.noise_mode);
  MLLAB_NUM(j, "log_lengthscale", h.log_lengthscale);
  MLLAB_NUM(j, "log_signal_var", h.log_signal_var);
  if (std::isfinite(h.log_noise)) {
    j["log_noise"] = h.log_noise;
  } else {
    j["log_noise"] = nullptr;  // exactly zero noise
  }
  if (h.net) {
    Json net;
    net["widths"] = h.net->spec().widths;
    std::vector<std::string> acts;
    for (Activation a : h.net->spec().activations) acts.push_back(to_string(a));
    net["activations"] = acts;
    net["num_params"] = h.net->size();
    MLLAB_NUM(net, "weight_norm", h.net->flat().norm());
    if (include_weights) {
      std::vector<double> w(h.net->flat().data(), h.net->flat().data() + h.net->flat().size());
      for (double v : w) finite_or_throw(v, "weights");
      net["weights"] = w;
    }
    j["net"] = net;
  }
  return j;
}

Json to_json(const SpectrumDiagnostics& s) {
  Json j;
  for (double v : s.eigenvalues) finite_or_throw(v, "eigenvalues");
  j["eigenvalues"] = s.eigenvalues;
  MLLAB_NUM(j, "logdet", s.logdet);
  MLLAB_NUM(j, "effective_rank", s.effective_rank);
  MLLAB_NUM(j, "mean_abs_offdiag_corr", s.mean_abs_offdiag_corr);
  return j;
}

Json to_json(const SweepReport& r) {
  Json j;
  Json rows = Json::array();
  for (const SweepRow& row : r.rows) {
    Json o;
    MLLAB_NUM(o, "lengthscale", row.lengthscale);
    MLLAB_NUM(o, "data_fit", row.lml.data_fit);
    MLLAB_NUM(o, "complexity", row.lml.complexity);
    MLLAB_NUM(o, "total", row.lml.total);
    MLLAB_NUM(o, "logdet", row.logdet);
    MLLAB_NUM(o, "effective_rank", row.effective_rank);
    MLLAB_NUM(o, "mean_abs_offdiag_corr", row.mean_abs_offdiag_corr);
    rows.push_back(o);
  }
  j["rows"] = rows;
  j["argmax_row"] = r.argmax_row;
  MLLAB_NUM(j, "argmax_lengthscale", r.rows.at(r.argmax_row).lengthscale);
  return j;
}

Json to_json(const ArmRecord& a) {
  Json j;
  j["objective"] = to_string(a.objective);
  j["status"] = a.ok ? "ok" : "failed";
  if (!a.ok) {
    j["error"] = a.error;
    return j;
  }
  j["iterations"] = a.iterations;
  j["converged"] = a.converged;
  j["stop_reason"] = to_string(a.reason);
  MLLAB_NUM(j, "final_objective", a.final_objective);
  Json theta;
  MLLAB_NUM(theta, "lengthscale", a.lengthscale);
  MLLAB_NUM(theta, "signal_var", a.signal_var);
  MLLAB_NUM(theta, "noise_variance", a.noise_variance);
  MLLAB_NUM(theta, "weight_norm", a.weight_norm);
  j["theta"] = theta;
  j["train_lml"] = to_json(a.train_lml);
  MLLAB_NUM(j, "test_rmse", a.test_rmse);
  MLLAB_NUM(j, "test_nlpd", a.test_nlpd);
  MLLAB_NUM(j, "kernel_mean_abs_offdiag_corr", a.kernel_corr);
  MLLAB_NUM(j, "covariance_mean_abs_offdiag_corr", a.covariance_corr);
  MLLAB_NUM(j, "covariance_effective_rank", a.effective_rank);
  return j;
}

Json to_json(const ComparisonReport& r) {
  Json j;
  j["seed"] = r.config.seed.value;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["clml_m"] = r.clml_m;
  Json arms = Json::array();
  for (const ArmRecord& a : r.arms) arms.push_back(to_json(a));
  j["arms"] = arms;
  return j;
}

Json to_json(const IdentityReport& r) {
  Json j;
  MLLAB_NUM(j, "tolerance", r.tolerance);
  j["instances"] = r.checks.size();
  MLLAB_NUM(j, "max_equivalence_residual", r.max_equivalence_residual);
  MLLAB_NUM(j, "max_data_fit_residual", r.max_data_fit_residual);
  MLLAB_NUM(j, "max_split_residual", r.max_split_residual);
  MLLAB_NUM(j, "max_stationarity_gradient", r.max_stationarity_gradient);
  j["all_maximal"] = r.all_maximal;
  j["passed"] = r.passed();
  Json checks = Json::array();
  for (const IdentityCheck& c : r.checks) {
    Json o;
    o["n"] = c.n;
    o["kernel"] = to_string(c.family);
    MLLAB_NUM(o, "equivalence_residual", c.equivalence_residual);
    MLLAB_NUM(o, "data_fit_residual", c.data_fit_residual);
    MLLAB_NUM(o, "split_residual", c.split_residual);
    MLLAB_NUM(o, "stationarity_gradient", c.stationarity_gradient);
    o["maximal"] = c.maximal;
    checks.push_back(o);
  }
  j["checks"] = checks;
  return j;
}

Json to_json(const GradientCheck& c) {
  Json j;
  auto vec = [](const Vector& v, const char* what) {
    std::vector<double> out(v.data(), v.data() + v.size());
    for (double x : out) finite_or_throw(x, what);
    return out;
  };
  j["analytic"] = vec(c.analytic, "analytic");
  j["numeric"] = vec(c.numeric, "numeric");
  j["error"] = vec(c.error, "error");
  MLLAB_NUM(j, "max_error", c.max_error);
  MLLAB_NUM(j, "max_error_hyper", c.max_error_hyper);
  MLLAB_NUM(j, "max_error_weights", c.max_error_weights);
  return j;
}

Json trace_summary(const OptTrace& t) {
  Json j;
  j["iterations"] = t.iterations.size() - 1;
  j["evaluations"] = t.evaluations;
  j["converged"] = t.converged;
  j["stop_reason"] = to_string(t.reason);
  MLLAB_NUM(j, "initial_value", t.iterations.front().value);
  MLLAB_NUM(j, "final_value", t.iterations.back().value);
  MLLAB_NUM(j, "final_grad_max_norm", t.iterations.back().grad_max_norm);
  return j;
}

#undef MLLAB_NUM

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvTable::to_csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << '\n';
  }
  return os.str();
}

CsvTable sweep_table(const SweepReport& r) {
  CsvTable t{"sweep",
             {"lengthscale", "data_fit", "complexity", "total", "logdet", "effective_rank",
              "mean_abs_offdiag_corr"},
             {}};
  for (const SweepRow& row : r.rows) {
    t.rows.push_back({row.lengthscale, row.lml.data_fit, row.lml.complexity, row.lml.total, row.logdet,
                      row.effective_rank, row.mean_abs_offdiag_corr});
  }
  return t;
}

CsvTable trace_table(const OptTrace& tr) {
  CsvTable t{"trace",
             {"iteration", "value", "grad_max_norm", "step", "log_lengthscale", "log_signal_var", "log_noise"},
             {}};
  for (std::size_t i = 0; i < tr.iterations.size(); ++i) {
    const OptIterate& it = tr.iterations[i];
    // Zero noise (-inf) is written as 0 in the log column; the JSON report is authoritative.
    const double log_noise = std::isfinite(it.theta(2)) ? it.theta(2) : 0.0;
    t.rows.push_back({static_cast<double>(i), it.value, it.grad_max_norm, it.step, it.theta(0), it.theta(1),
                      log_noise});
  }
  return t;
}

CsvTable comparison_table(const std::vector<ComparisonReport>& reports) {
  CsvTable t{"compare",
             {"seed", "objective_code", "ok", "test_rmse", "test_nlpd", "train_lml", "kernel_corr", "covariance_corr",
              "lengthscale", "noise_variance"},
             {}};
  for (const ComparisonReport& r : reports) {
    for (const ArmRecord& a : r.arms) {
      t.rows.push_back({static_cast<double>(r.config.seed.value), static_cast<double>(a.objective),
                        a.ok ? 1.0 : 0.0, a.test_rmse, a.test_nlpd, a.train_lml.total, a.kernel_corr,
                        a.covariance_corr, a.lengthscale, a.noise_variance});
    }
  }
  return t;
}

}  // namespace mllab
