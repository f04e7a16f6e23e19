// diraclab: command-line front end. One subcommand per experiment; every
// subcommand takes the same flags, and --set KEY=VALUE reaches any other key.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diraclab/config.hpp"
#include "diraclab/error.hpp"
#include "diraclab/runner.hpp"
#include "diraclab/version.hpp"

namespace {

struct Flags {
  std::string config;
  std::map<std::string, std::string> values;  // key -> raw value, from named flags
  std::vector<std::string> sets;
  bool check = false;
  bool list_keys = false;
};

// flag spelling -> config key
const std::vector<std::pair<std::string, std::string>> kNamedFlags = {
    {"--out", "out"},   {"--seed", "seed"}, {"--realizations", "realizations"},
    {"--sites", "sites"}, {"--mass", "mass"}, {"--c", "c"},
    {"--v", "v"},       {"--p", "p"},       {"--threads", "threads"},
};

const std::map<std::string, std::string> kHelp = {
    {"out", "Output directory (default $DIRACLAB_OUT/<experiment>, else runs/<experiment>)"},
    {"seed", "Base seed (u64)"},
    {"realizations", "Disorder realizations"},
    {"sites", "Lattice sites"},
    {"mass", "Mass m"},
    {"c", "Light speed c"},
    {"v", "Potential magnitude v"},
    {"p", "Probability of -v"},
    {"threads", "Worker threads, 0 = all hardware threads"},
};

const std::map<diraclab::Experiment, std::string> kDescriptions = {
    {diraclab::Experiment::lyapunov_sweep, "Lyapunov exponent over an energy grid"},
    {diraclab::Experiment::critical_energies, "Lyapunov exponent at the critical energies"},
    {diraclab::Experiment::moments, "Disorder-averaged time-averaged second moment"},
    {diraclab::Experiment::delocalization, "Massless moment growth exponent with contrast run"},
    {diraclab::Experiment::localization, "Saturation of the moment off the critical set"},
    {diraclab::Experiment::mass_gap, "Mass perturbation |M0 - Mm| against m c^2 t^4"},
    {diraclab::Experiment::nrl, "Nonrelativistic limit against the Schrodinger chain"},
    {diraclab::Experiment::zitter, "Velocity expectation and its interband oscillation"},
    {diraclab::Experiment::eigenfunctions, "Eigenfunction decay rates against Lyapunov exponents"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random Dirac chain laboratory"};
  app.set_version_flag("--version", diraclab::kVersion);
  app.require_subcommand(1);

  std::map<diraclab::Experiment, Flags> flags;
  std::map<diraclab::Experiment, CLI::App*> subs;
  for (diraclab::Experiment e : diraclab::all_experiments()) {
    Flags& f = flags[e];
    CLI::App* sub = app.add_subcommand(diraclab::to_string(e), kDescriptions.at(e));
    sub->add_option("--config", f.config, "key=value configuration file");
    for (const auto& [flag, key] : kNamedFlags) sub->add_option(flag, f.values[key], kHelp.at(key));
    sub->add_option("--set", f.sets, "Any other configuration key, as KEY=VALUE")->take_all();
    sub->add_flag("--check", f.check, "Exit with status 3 when any check fails");
    sub->add_flag("--list-keys", f.list_keys, "Print the keys this experiment accepts and exit");
    subs[e] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? diraclab::kExitOk : diraclab::kExitUsage;
  }

  for (auto& [experiment, sub] : subs) {
    if (!sub->parsed()) continue;
    const Flags& f = flags[experiment];
    if (f.list_keys) {
      for (const auto& k : diraclab::config_keys(experiment)) std::cout << k << "\n";
      return diraclab::kExitOk;
    }
    std::vector<diraclab::FlagValue> values;
    for (const auto& [flag, key] : kNamedFlags)
      if (sub->count(flag) > 0) values.push_back({key, f.values.at(key), flag});
    for (const auto& kv : f.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "diraclab: error: --set expects KEY=VALUE, got '" << kv << "'\n";
        return diraclab::kExitUsage;
      }
      values.push_back({kv.substr(0, eq), kv.substr(eq + 1), "--set " + kv.substr(0, eq)});
    }
    try {
      diraclab::RunConfig config = diraclab::load_config(
          experiment, f.config.empty() ? std::nullopt : std::optional(f.config), values);
      config.check = f.check;
      return diraclab::run(config, std::cout);
    } catch (const diraclab::ConfigError& e) {
      std::cerr << "diraclab: configuration error: " << e.what() << "\n";
      return diraclab::kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "diraclab: error: " << e.what() << "\n";
      return diraclab::kExitFailure;
    }
  }
  return diraclab::kExitUsage;
}
