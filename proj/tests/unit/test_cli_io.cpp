#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "diraclab/config.hpp"
#include "diraclab/error.hpp"
#include "diraclab/report.hpp"
#include "diraclab/runner.hpp"

using namespace diraclab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("diraclab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string error_of(Experiment e, const std::string& text, const std::vector<FlagValue>& flags) {
  try {
    parse_config(e, text, "run.cfg", flags);
  } catch (const ConfigError& err) {
    return err.what();
  }
  return "";
}

}  // namespace

TEST_CASE("experiment names round trip") {
  for (Experiment e : all_experiments()) CHECK(experiment_from_string(to_string(e)) == e);
  CHECK(to_string(Experiment::lyapunov_sweep) == "lyapunov-sweep");
  CHECK_THROWS_AS(experiment_from_string("nope"), ConfigError);
}

TEST_CASE("empty configuration uses defaults") {
  const RunConfig c = parse_config(Experiment::moments, "", "run.cfg", {});
  CHECK(c.entries.empty());
  CHECK(c.get_double("mass", 0.0) == 0.0);
  CHECK(c.get_double("c", 1.0) == 1.0);
  CHECK(c.get_size("realizations", 4) == 4);
  CHECK(c.canonical() == "experiment=moments\n");
}

TEST_CASE("out-of-range values are rejected with the flag named") {
  const std::string msg = error_of(Experiment::moments, "", {{"p", "1.3", "--p"}});
  CHECK(msg.find("--p") != std::string::npos);
  CHECK(msg.find("1.3") != std::string::npos);
  CHECK(!error_of(Experiment::moments, "", {{"p", "abc", "--p"}}).empty());
  CHECK(!error_of(Experiment::moments, "", {{"sites", "-4", "--sites"}}).empty());
  CHECK(!error_of(Experiment::moments, "", {{"c", "0", "--c"}}).empty());
}

TEST_CASE("file errors carry the line number") {
  const std::string text = "# comment\nmass = 0.5\n\nbogus = 1\n";
  const std::string msg = error_of(Experiment::moments, text, {});
  CHECK(msg.find("run.cfg:4") != std::string::npos);
  CHECK(msg.find("bogus") != std::string::npos);

  CHECK(error_of(Experiment::moments, "mass\n", {}).find("run.cfg:1") != std::string::npos);
  CHECK(error_of(Experiment::moments, "mass=1\nmass=2\n", {}).find("run.cfg:2") != std::string::npos);
  CHECK(error_of(Experiment::moments, "experiment=nrl\n", {}).find("run.cfg:1") != std::string::npos);
}

TEST_CASE("keys an experiment does not use are rejected") {
  CHECK(error_of(Experiment::nrl, "n_steps=100000\n", {}).find("not used") != std::string::npos);
  CHECK(!error_of(Experiment::zitter, "", {{"realizations", "3", "--realizations"}}).empty());
}

TEST_CASE("flags override the file and the override is recorded") {
  const RunConfig c =
      parse_config(Experiment::moments, "mass = 0.5\nseed = 7\n", "run.cfg", {{"mass", "0.25", "--mass"}});
  CHECK(c.get_double("mass", 0.0) == 0.25);
  CHECK(c.entries.at("mass").source == "flag --mass");
  CHECK(c.entries.at("seed").source == "run.cfg:2");
  REQUIRE(c.overridden.count("mass") == 1);
  CHECK(c.overridden.at("mass").source == "run.cfg:1");
  CHECK(std::stod(c.overridden.at("mass").value) == 0.5);
  CHECK(!error_of(Experiment::moments, "", {{"mass", "1", "--mass"}, {"mass", "2", "--set mass"}}).empty());
}

TEST_CASE("inconsistent combinations are rejected") {
  CHECK(!error_of(Experiment::moments, "t_min=10\nt_max=5\n", {}).empty());
  CHECK(!error_of(Experiment::lyapunov_sweep, "e_min=1\ne_max=-1\n", {}).empty());
  CHECK(!error_of(Experiment::delocalization, "v=1.5\n", {}).empty());
}

TEST_CASE("output directory resolution") {
  const RunConfig explicit_out = parse_config(Experiment::nrl, "out=/tmp/x\n", "f", {});
  CHECK(explicit_out.out_dir == fs::path("/tmp/x"));
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  CHECK(parse_config(Experiment::nrl, "", "f", {}).out_dir == fs::path("/tmp/root/nrl"));
  ::unsetenv(kOutputRootEnv);
  CHECK(parse_config(Experiment::nrl, "", "f", {}).out_dir == fs::path("runs/nrl"));
}

TEST_CASE("unreadable config file") {
  CHECK_THROWS_AS(load_config(Experiment::nrl, fs::path("/nonexistent/run.cfg"), {}), ConfigError);
}

TEST_CASE("runs are byte-identical and write a manifest") {
  const fs::path a = scratch("a"), b = scratch("b");
  const auto make = [](const fs::path& out) {
    RunConfig c = parse_config(Experiment::nrl, "sites = 41\nseed = 3\n", "run.cfg",
                               {{"out", out.string(), "--out"}});
    return c;
  };
  std::ostringstream log_a, log_b;
  CHECK(run(make(a), log_a) == kExitOk);
  CHECK(run(make(b), log_b) == kExitOk);

  for (const char* name : {"report.json", "nrl_error.csv", "free_nrl_error.csv", "plot.py"}) {
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const std::string manifest = slurp(a / "manifest.json");
  CHECK(manifest.find("\"canonical_config\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 3") != std::string::npos);
  CHECK(manifest.find("\"report.json\"") != std::string::npos);
  CHECK(manifest.find("run.cfg:1") != std::string::npos);
  CHECK(log_a.str().find("PASS ") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("check mode reports failing checks through the exit status") {
  const fs::path out = scratch("check");
  // A short chain cannot resolve gamma below 1e-9.
  RunConfig c = parse_config(Experiment::critical_energies,
                             "v = 0.5\nn_steps = 10000\nrealizations = 2\ngamma_max = 1e-9\n", "f",
                             {{"out", out.string(), "--out"}});
  c.check = true;
  std::ostringstream log;
  CHECK(run(c, log) == kExitCheckFailed);
  CHECK(log.str().find("FAIL ") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("CSV tables keep full precision and spell out infinities") {
  Table t{"x", {"a", "b"}, {{0.1, std::numeric_limits<double>::infinity()}, {1.0 / 3.0, -2.0}}};
  std::ostringstream os;
  write_table_csv(os, t);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b");
  std::getline(in, line);
  CHECK(line == "0.10000000000000001,inf");
  std::getline(in, line);
  CHECK(std::stod(line.substr(0, line.find(','))) == 1.0 / 3.0);

  ExperimentReport r;
  r.experiment = "x";
  r.add_measurement("nan", std::nan(""));
  CHECK(report_to_json(r).find("null") != std::string::npos);
}

TEST_CASE("writing into an unwritable location fails with the path") {
  try {
    write_file("/proc/diraclab/nope.txt", "x");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/proc/diraclab/nope.txt") != std::string::npos);
  }
}
