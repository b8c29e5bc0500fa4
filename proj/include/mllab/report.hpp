#pragma once

// JSON and CSV serialization of experiment results.

#include "mllab/lab.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mllab {

using Json = nlohmann::ordered_json;

/// Returns v, or throws NonFiniteValue naming `what`. Reports never carry
/// NaN or infinities.
double finite_or_throw(double v, const std::string& what);

Json to_json(const MLLBreakdown& b);
Json to_json(const ProfiledResult& r);
Json to_json(const Hyperparameters& h, bool include_weights = false);
Json to_json(const SpectrumDiagnostics& s);
Json to_json(const SweepReport& r);
Json to_json(const ArmRecord& a);
Json to_json(const ComparisonReport& r);
Json to_json(const IdentityReport& r);
Json to_json(const GradientCheck& c);
Json trace_summary(const OptTrace& t);

/// Plot-ready table; numbers are written with 17 significant digits.
/// Objectives appear as codes: 0 lml, 1 profiled_lml, 2 clml.
struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
};

std::string format_number(double v);

CsvTable sweep_table(const SweepReport& r);
CsvTable trace_table(const OptTrace& t);
CsvTable comparison_table(const std::vector<ComparisonReport>& reports);

}  // namespace mllab
