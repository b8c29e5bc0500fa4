#include "support.hpp"

#include "mllab/cli.hpp"
#include "mllab/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mllab_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mllab");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

int quiet_run(const RunConfig& cfg, const std::string& out) {
  std::ostringstream o;
  std::ostringstream e;
  return run_command(cfg, out, o, e);
}

}  // namespace

TEST_CASE("csv with one row") {
  const Dataset d = ingest_csv(write_file("one.csv", "x,y\n0.0,1.0\n").string());
  CHECK(d.size() == 1);
  CHECK(d.dim() == 1);
  CHECK(d.y()(0) == 1.0);
}

TEST_CASE("csv with three columns, CRLF endings and a byte-order mark") {
  const Dataset d = ingest_csv(write_file("three.csv", "\xEF\xBB\xBF" "a,b,t\r\n1,2,3\r\n4,5,6\r\n").string());
  CHECK(d.size() == 2);
  CHECK(d.dim() == 2);
  CHECK(d.X()(1, 0) == 4.0);
  CHECK(d.y()(1) == 6.0);
}

TEST_CASE("csv errors name the offending cell") {
  try {
    ingest_csv(write_file("bad.csv", "x,y\nabc,1\n").string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == 1);
  }
  try {
    ingest_csv(write_file("ragged.csv", "x,y\n1,2\n3\n").string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
  }
  CHECK_THROWS_AS(ingest_csv(write_file("empty.csv", "").string()), EmptyFile);
  CHECK_THROWS_AS(ingest_csv(write_file("header.csv", "x,y\n").string()), EmptyFile);
  CHECK_THROWS_AS(ingest_csv(write_file("nan.csv", "x,y\n1,nan\n").string()), NonFiniteValue);
  CHECK_THROWS_AS(ingest_csv(write_file("narrow.csv", "y\n1\n").string()), InputError);
  CHECK_THROWS_AS(ingest_csv(scratch("does_not_exist.csv").string()), InputError);
}

TEST_CASE("run configs round-trip through json") {
  RunConfig c;
  c.command = "fit";
  c.kernel = "deep_rbf";
  c.hidden = {5, 3};
  c.init_noise = 0.0;
  c.fix = {"noise"};
  c.clml_m = 7;
  c.seed = 123456789012345ULL;
  const RunConfig r = RunConfig::from_json(c.to_json());
  CHECK(r.to_json() == c.to_json());
  CHECK(r.hidden == c.hidden);
  CHECK(*r.clml_m == 7);
  CHECK_FALSE(RunConfig::from_json(RunConfig{}.to_json()).init_lengthscale.has_value());
}

TEST_CASE("missing input file: exit 2 and no report") {
  RunConfig c;
  c.command = "fit";
  c.data_path = scratch("missing.csv").string();
  const fs::path out = scratch("missing_report.json");
  fs::remove(out);
  CHECK(quiet_run(c, out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("fit on one point recovers the squared target") {
  const fs::path data = write_file("scalar.csv", "x,y\n0,2\n");
  const fs::path out = scratch("scalar.json");
  CHECK(run_cli({"fit", "--data", data.string(), "--fix", "lengthscale,noise", "--noise", "0", "--lengthscale",
                 "1", "--signal-var", "1", "--grad-tol", "1e-10", "--out", out.string()}) == 0);
  const Json j = Json::parse(read_file(out));
  CHECK(std::abs(j["result"]["final_hyperparameters"]["signal_var"].get<double>() - 4.0) < 1e-6);
  CHECK(j["result"]["final_hyperparameters"]["log_noise"].is_null());
  CHECK(j["result"]["train_metrics"]["mean_nlpd"].is_null());
  CHECK(fs::exists(scratch("scalar.trace.csv")));
}

TEST_CASE("verify on random instances") {
  RunConfig c;
  c.command = "verify";
  c.random_instances = 50;
  c.seed = 7;
  const CommandOutput o = execute(c);
  CHECK(o.exit_code == 0);
  const Json& id = o.report["result"]["identities"];
  CHECK(id["max_equivalence_residual"].get<double>() <= 1e-8);
  CHECK(id["instances"].get<int>() == 50);
  CHECK(o.report["status"] == "ok");
}

TEST_CASE("a failing tolerance exits 1") {
  RunConfig c;
  c.command = "verify";
  c.random_instances = 4;
  c.tolerance = 0.0;
  CHECK(quiet_run(c, scratch("strict.json").string()) == 1);
}

TEST_CASE("input errors exit 2") {
  RunConfig c;
  c.command = "fit";
  c.n = 10;
  c.init_noise = 0.0;
  CHECK(quiet_run(c, "") == 2);
  c.init_noise.reset();
  c.kernel = "matern";
  CHECK(quiet_run(c, "") == 2);
  c.kernel = "rbf";
  c.fix = {"everything"};
  CHECK(quiet_run(c, "") == 2);
  CHECK(run_cli({"fit", "--no-such-flag"}) == 2);
  CHECK(run_cli({"rerun", "--report", scratch("nothing.json").string()}) == 2);
}

TEST_CASE("reports carry config and metadata; bodies are reproducible") {
  RunConfig c;
  c.command = "sweep";
  c.n = 30;
  c.grid = "0.1:100:log:7";
  const CommandOutput a = execute(c);
  const CommandOutput b = execute(c);
  CHECK(a.report.contains("metadata"));
  CHECK(a.report["metadata"]["tool"] == "mllab");
  CHECK(a.report["config"] == c.to_json());
  CHECK(report_body(a.report) == report_body(b.report));
  CHECK(report_body(a.report).find("metadata") == std::string::npos);
  REQUIRE(a.tables.size() == 1);
  CHECK(a.tables[0].rows.size() == 7);
}

TEST_CASE("rerun reproduces the report body") {
  const fs::path first = scratch("first.json");
  const fs::path second = scratch("second.json");
  REQUIRE(run_cli({"fit", "--n", "25", "--seed", "4", "--objective", "clml", "--max-iters", "30", "--out",
                   first.string()}) == 0);
  REQUIRE(run_cli({"rerun", "--report", first.string(), "--out", second.string()}) == 0);
  CHECK(report_body(Json::parse(read_file(first))) == report_body(Json::parse(read_file(second))));
  CHECK(read_file(scratch("first.trace.csv")) == read_file(scratch("second.trace.csv")));
}

TEST_CASE("gradcheck command") {
  RunConfig c;
  c.command = "gradcheck";
  c.objective = "profiled_lml";
  c.random_instances = 6;
  const CommandOutput o = execute(c);
  CHECK(o.exit_code == 0);
  CHECK(o.report["result"]["passed"] == true);
  CHECK(o.report["result"]["checks"].size() == 6);
}

TEST_CASE("compare command summarises every objective") {
  RunConfig c;
  c.command = "compare";
  c.n = 15;
  c.max_iters = 3;
  c.hidden = {3};
  c.replicates = 2;
  const CommandOutput o = execute(c);
  CHECK(o.exit_code == 0);
  CHECK(o.report["result"]["runs"].size() == 2);
  CHECK(o.report["result"]["summary"]["clml"]["completed"].get<int>() == 2);
  c.data_path = "x.csv";
  CHECK(quiet_run(c, "") == 2);
}
