#pragma once

// Command-line front end: CSV ingestion, run configuration and commands.

#include "mllab/report.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mllab {

/// Everything needed to reproduce a run. Embedded verbatim in every report
/// under "config"; the output path is kept out of it so that a rerun to a
/// different file reproduces the same body.
struct RunConfig {
  std::string command;  // fit | sweep | compare | verify | gradcheck

  // Data: a CSV path, or a synthetic generator when empty.
  std::string data_path;
  std::string generator = "gp_sample";
  Index n = 50;
  double noise_sd = 0.1;
  double gen_lengthscale = 1.0;
  double gen_signal_var = 1.0;
  int gen_dim = 1;

  // Model.
  std::string kernel = "rbf";
  std::vector<int> hidden{16, 16};
  int feature_dim = 2;
  std::string noise_mode = "absolute";
  std::optional<double> init_lengthscale;
  std::optional<double> init_signal_var;
  std::optional<double> init_noise;  // noise variance, or ratio in ratio mode; 0 allowed when fixed
  std::vector<std::string> fix;      // any of lengthscale, signal_var, noise, net

  // Objective and optimizer.
  std::string objective = "lml";
  std::vector<std::string> objectives{"lml", "clml"};  // compare
  int max_iters = 500;
  double grad_tol = 1e-6;
  std::optional<Index> clml_m;
  Index clml_permutations = 10;
  double weight_decay = 0.0;

  // Sweep.
  std::string grid = "0.1:1000:log:25";
  std::string grid_units = "median";  // median | absolute

  // Verification.
  int random_instances = 0;
  double tolerance = 1e-8;
  double fd_step = 1e-6;
  double gradcheck_tol = 1e-5;
  double gradcheck_weight_tol = 1e-3;

  int replicates = 1;  // compare: seeds seed .. seed + replicates - 1
  std::uint64_t seed = 0;

  Json to_json() const;
  static RunConfig from_json(const Json& j);
};

/// Header row then numeric rows; the last column is the target.
/// Throws EmptyFile, ParseError (1-based row counting the header, 1-based
/// column) or NonFiniteValue.
Dataset ingest_csv(const std::string& path);

struct CommandOutput {
  int exit_code = 0;  // 0 ok, 1 verification failure
  Json report;        // metadata, config, result
  std::vector<CsvTable> tables;
};

/// Runs one command without touching the filesystem except to read input
/// data. Throws InputError for bad configuration or input.
CommandOutput execute(const RunConfig& cfg);

/// Report serialized without its "metadata" block. Two runs of the same
/// config produce identical bodies.
std::string report_body(const Json& report);

/// Executes and writes the report (and CSV side-files next to it, named
/// <stem>.<table>.csv) to out_path, or prints the report to `out` when
/// out_path is empty. Returns the process exit code: 0 success,
/// 1 verification or numerical failure, 2 input error. Errors go to `err`.
int run_command(const RunConfig& cfg, const std::string& out_path, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches, including `rerun --report FILE`.
int cli_main(int argc, char** argv);

}  // namespace mllab
