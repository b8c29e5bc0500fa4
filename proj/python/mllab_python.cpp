#include "mllab/cli.hpp"
#include "mllab/error.hpp"
#include "mllab/gp.hpp"
#include "mllab/lab.hpp"
#include "mllab/objectives.hpp"
#include "mllab/profiled.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

namespace py = pybind11;
using namespace mllab;

namespace {

double log_or_neg_inf(double v) { return v == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(v); }

Hyperparameters make_hyperparameters(double lengthscale, double signal_var, double noise, const std::string& mode) {
  Hyperparameters h;
  h.log_lengthscale = std::log(lengthscale);
  h.log_signal_var = std::log(signal_var);
  h.log_noise = log_or_neg_inf(noise);
  h.noise_mode = noise_mode_from_string(mode);
  h.validate();
  return h;
}

Hyperparameters with_network(const Hyperparameters& h, int input_dim, const std::vector<int>& hidden, int output_dim,
                             std::uint64_t seed) {
  Hyperparameters out = h;
  out.net = net_init(NetSpec::mlp(input_dim, hidden, output_dim), Seed{seed});
  return out;
}

KernelSpec kernel_spec(const std::string& family) { return KernelSpec{kernel_family_from_string(family)}; }

py::dict breakdown_dict(const MLLBreakdown& b) {
  py::dict d;
  d["data_fit"] = b.data_fit;
  d["complexity"] = b.complexity;
  d["constant"] = b.constant;
  d["total"] = b.total;
  return d;
}

std::string run_json(const std::string& config_text) {
  Json cfg = RunConfig{}.to_json();
  const Json user = Json::parse(config_text);
  if (!user.is_object()) throw InputError("run config must be a JSON object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!cfg.contains(it.key())) throw InputError("unknown run config key '" + it.key() + "'");
    cfg[it.key()] = it.value();
  }
  const CommandOutput out = execute(RunConfig::from_json(cfg));
  return out.report.dump();
}

}  // namespace

PYBIND11_MODULE(mllab, m) {
  m.doc() = "Exact Gaussian-process marginal likelihood lab";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<Hyperparameters>(m, "Hyperparameters")
      .def(py::init(&make_hyperparameters), py::arg("lengthscale") = 1.0, py::arg("signal_var") = 1.0,
           py::arg("noise") = 0.1, py::arg("noise_mode") = "absolute")
      .def_readwrite("log_lengthscale", &Hyperparameters::log_lengthscale)
      .def_readwrite("log_signal_var", &Hyperparameters::log_signal_var)
      .def_readwrite("log_noise", &Hyperparameters::log_noise)
      .def_property_readonly("noise_mode", [](const Hyperparameters& h) { return to_string(h.noise_mode); })
      .def_property_readonly("lengthscale", &Hyperparameters::lengthscale)
      .def_property_readonly("signal_var", &Hyperparameters::signal_var)
      .def_property_readonly("noise_variance", &Hyperparameters::noise_variance)
      .def_property_readonly("has_network", [](const Hyperparameters& h) { return h.net.has_value(); })
      .def_property_readonly("num_params", &Hyperparameters::num_params)
      .def("to_vector", &Hyperparameters::to_vector)
      .def("with_vector", &Hyperparameters::with_vector, py::arg("theta"))
      .def("with_network", &with_network, py::arg("input_dim"), py::arg("hidden"), py::arg("output_dim"),
           py::arg("seed") = 0);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<Matrix, Vector>(), py::arg("X"), py::arg("y"))
      .def_property_readonly("X", &Dataset::X)
      .def_property_readonly("y", &Dataset::y)
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim);

  m.def(
      "log_marginal_likelihood",
      [](const Dataset& d, const Hyperparameters& h, const std::string& kernel) {
        return breakdown_dict(log_marginal_likelihood(d, h, kernel_spec(kernel)));
      },
      py::arg("data"), py::arg("h"), py::arg("kernel") = "rbf");
  m.def(
      "lml_gradient",
      [](const Dataset& d, const Hyperparameters& h, const std::string& kernel) {
        return lml_gradient(d, h, kernel_spec(kernel));
      },
      py::arg("data"), py::arg("h"), py::arg("kernel") = "rbf");
  m.def(
      "profiled_signal_variance",
      [](const Dataset& d, const Hyperparameters& h, const std::string& kernel) {
        return profiled_signal_variance(d, h, kernel_spec(kernel));
      },
      py::arg("data"), py::arg("h"), py::arg("kernel") = "rbf");
  m.def(
      "profiled_objective",
      [](const Dataset& d, const Hyperparameters& h, const std::string& kernel) {
        const ProfiledResult r = profiled_objective(d, h, kernel_spec(kernel));
        py::dict out;
        out["sigma_f_hat_sq"] = r.sigma_f_hat_sq;
        out["collapsed_data_fit"] = r.collapsed_data_fit;
        out["term_data_refit"] = r.term_data_refit;
        out["term_logdet_hat"] = r.term_logdet_hat;
        out["constant"] = r.constant;
        out["profiled_total"] = r.profiled_total;
        out["induced"] = breakdown_dict(r.induced);
        out["equivalence_residual"] = r.equivalence_residual;
        return out;
      },
      py::arg("data"), py::arg("h"), py::arg("kernel") = "rbf");
  m.def(
      "evaluate_objective",
      [](const std::string& kind, const Dataset& d, const Hyperparameters& h, const std::string& kernel,
         std::uint64_t seed) {
        const Objective obj(objective_kind_from_string(kind), d, kernel_spec(kernel),
                            ClmlConfig::defaults(d.size(), Seed{seed}));
        const Evaluation e = obj.evaluate(h);
        return py::make_tuple(e.value, e.gradient);
      },
      py::arg("kind"), py::arg("data"), py::arg("h"), py::arg("kernel") = "rbf", py::arg("seed") = 0);
  m.def(
      "optimize",
      [](const std::string& kind, const Dataset& d, const Hyperparameters& h0, const std::string& kernel,
         int max_iters, double grad_tol, std::uint64_t seed) {
        const Objective obj(objective_kind_from_string(kind), d, kernel_spec(kernel),
                            ClmlConfig::defaults(d.size(), Seed{seed}));
        OptConfig cfg;
        cfg.max_iters = max_iters;
        cfg.grad_tol = grad_tol;
        const OptTrace t = optimize(obj, h0, cfg);
        std::vector<double> values;
        for (const OptIterate& it : t.iterations) values.push_back(it.value);
        py::dict out;
        out["final"] = t.final;
        out["converged"] = t.converged;
        out["stop_reason"] = to_string(t.reason);
        out["values"] = values;
        out["evaluations"] = t.evaluations;
        return out;
      },
      py::arg("kind"), py::arg("data"), py::arg("h0"), py::arg("kernel") = "rbf", py::arg("max_iters") = 500,
      py::arg("grad_tol") = 1e-6, py::arg("seed") = 0);
  m.def(
      "generate_synthetic",
      [](const std::string& kind, Index n, double noise_sd, std::uint64_t seed) {
        return generate_synthetic(synthetic_kind_from_string(kind), n, noise_sd, Seed{seed});
      },
      py::arg("kind"), py::arg("n"), py::arg("noise_sd"), py::arg("seed") = 0);
  m.def("run", &run_json, py::arg("config_json"),
        "Execute a run config given as JSON (unspecified keys take their defaults); returns the report as JSON.");
}
