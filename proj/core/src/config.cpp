#include "diraclab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "diraclab/error.hpp"

namespace diraclab {

namespace {

using E = Experiment;

struct ExperimentName {
  E experiment;
  const char* name;
};

constexpr ExperimentName kExperimentNames[] = {
    {E::lyapunov_sweep, "lyapunov-sweep"},
    {E::critical_energies, "critical-energies"},
    {E::moments, "moments"},
    {E::delocalization, "delocalization"},
    {E::localization, "localization"},
    {E::mass_gap, "mass-gap"},
    {E::nrl, "nrl"},
    {E::zitter, "zitter"},
    {E::eigenfunctions, "eigenfunctions"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string canonical_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(const std::string& text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last || !std::isfinite(x) || first == last)
    throw ConfigError("'" + text + "' is not a finite number");
  return x;
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t x = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last || first == last)
    throw ConfigError("'" + text + "' is not a non-negative integer");
  return x;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  if (items.empty() || std::any_of(items.begin(), items.end(),
                                   [](const std::string& s) { return s.empty(); }))
    throw ConfigError("'" + text + "' is not a comma-separated list");
  return items;
}

// A key's validator returns the canonical spelling or throws ConfigError.
using Canonicalizer = std::function<std::string(const std::string&)>;

Canonicalizer real_in(double lo, double hi, bool lo_open, bool hi_open, std::string range) {
  return [=](const std::string& text) {
    const double x = parse_real(text);
    const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    if (!ok) throw ConfigError(text + " is out of range, expected " + range);
    return canonical_real(x);
  };
}

Canonicalizer any_real() {
  return [](const std::string& text) { return canonical_real(parse_real(text)); };
}

Canonicalizer integer_at_least(std::uint64_t lo) {
  return [=](const std::string& text) {
    const std::uint64_t x = parse_u64(text);
    if (x < lo) throw ConfigError(text + " is out of range, expected >= " + std::to_string(lo));
    return std::to_string(x);
  };
}

Canonicalizer one_of(std::vector<std::string> allowed) {
  return [=](const std::string& text) {
    if (std::find(allowed.begin(), allowed.end(), text) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("'" + text + "' is not one of " + list);
    }
    return text;
  };
}

Canonicalizer boolean() {
  return [](const std::string& text) -> std::string {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return "true";
    if (text == "false" || text == "0" || text == "no" || text == "off") return "false";
    throw ConfigError("'" + text + "' is not a boolean");
  };
}

// Comma-separated reals, each passing `item`; optionally strictly increasing.
Canonicalizer real_list(Canonicalizer item, bool increasing) {
  return [=](const std::string& text) {
    std::string out;
    double previous = -std::numeric_limits<double>::infinity();
    for (const auto& s : split_list(text)) {
      const std::string c = item(s);
      const double x = parse_real(c);
      if (increasing && !(x > previous))
        throw ConfigError("list '" + text + "' must be strictly increasing");
      previous = x;
      out += (out.empty() ? "" : ",") + c;
    }
    return out;
  };
}

Canonicalizer integer_list(std::uint64_t lo) {
  return [=](const std::string& text) {
    std::string out;
    for (const auto& s : split_list(text)) out += (out.empty() ? "" : ",") + integer_at_least(lo)(s);
    return out;
  };
}

Canonicalizer path() {
  return [](const std::string& text) {
    if (text.empty()) throw ConfigError("empty path");
    return text;
  };
}

struct KeySpec {
  const char* name;
  Canonicalizer canonicalize;
  std::vector<E> experiments;  // empty: every experiment
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    const std::vector<E> dyn{E::moments, E::delocalization, E::localization, E::mass_gap};
    const auto all_but = [](std::initializer_list<E> excluded) {
      std::vector<E> v;
      for (const auto& n : kExperimentNames)
        if (std::find(excluded.begin(), excluded.end(), n.experiment) == excluded.end())
          v.push_back(n.experiment);
      return v;
    };
    const double inf = std::numeric_limits<double>::infinity();
    return std::vector<KeySpec>{
        {"mass", real_in(0, inf, false, false, ">= 0"), all_but({E::delocalization})},
        {"c", real_in(0, inf, true, false, "> 0"), all_but({E::nrl})},
        {"v", real_in(0, inf, false, false, ">= 0"), all_but({E::zitter})},
        {"p", real_in(0, 1, true, true, "in (0, 1)"), all_but({E::zitter})},
        {"kind", one_of({"bernoulli", "dimer", "constant_zero"}),
         {E::lyapunov_sweep, E::moments, E::eigenfunctions}},
        {"seed", integer_at_least(0), all_but({E::zitter})},
        {"stream", integer_at_least(0), all_but({E::zitter})},
        {"realizations", integer_at_least(1), all_but({E::nrl, E::zitter})},
        {"sites", integer_at_least(4), all_but({E::lyapunov_sweep, E::critical_energies})},
        {"sizes", integer_list(4), {E::delocalization, E::localization}},
        {"boundary", one_of({"open", "periodic"}), {E::moments}},
        {"initial", one_of({"upper_delta", "balanced"}), {E::moments}},
        {"t_min", real_in(0, inf, true, false, "> 0"), dyn},
        {"t_max", real_in(0, inf, true, false, "> 0"),
         {E::moments, E::delocalization, E::localization, E::mass_gap, E::zitter}},
        {"t_points", integer_at_least(2), dyn},
        {"times", real_list(real_in(0, inf, false, false, ">= 0"), true),
         {E::moments, E::delocalization, E::localization, E::mass_gap, E::nrl}},
        {"n_steps", integer_at_least(10'000),
         {E::lyapunov_sweep, E::critical_energies, E::eigenfunctions}},
        {"e_min", any_real(), {E::lyapunov_sweep}},
        {"e_max", any_real(), {E::lyapunov_sweep}},
        {"e_points", integer_at_least(1), {E::lyapunov_sweep}},
        {"refine_levels", integer_at_least(0), {E::lyapunov_sweep}},
        {"gamma_max", real_in(0, inf, true, false, "> 0"), {E::critical_energies}},
        {"fit_t_min", real_in(0, inf, true, false, "> 0"), {E::delocalization}},
        {"contrast_v", real_in(0, inf, false, false, ">= 0"), {E::delocalization}},
        {"masses", real_list(real_in(0, inf, false, false, ">= 0"), false), {E::mass_gap}},
        {"t_star_index", integer_at_least(0), {E::mass_gap}},
        {"speeds", real_list(real_in(0, inf, true, false, "> 0"), false), {E::nrl}},
        {"free_variant", boolean(), {E::nrl}},
        {"width", real_in(0, inf, true, false, "> 0"), {E::zitter}},
        {"momentum", any_real(), {E::zitter}},
        {"samples", integer_at_least(16), {E::zitter}},
        {"energies", real_list(any_real(), false), {E::eigenfunctions}},
        {"states_per_energy", integer_at_least(1), {E::eigenfunctions}},
        {"threads", integer_at_least(0), {}},
        {"out", path(), {}},
    };
  }();
  return table;
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (key == k.name) return &k;
  return nullptr;
}

bool applies(const KeySpec& k, E e) {
  return k.experiments.empty() ||
         std::find(k.experiments.begin(), k.experiments.end(), e) != k.experiments.end();
}

void set_entry(RunConfig& config, const std::string& key, const std::string& raw,
               const std::string& where) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError(where + ": unknown key '" + key + "'");
  if (!applies(*spec, config.experiment))
    throw ConfigError(where + ": key '" + key + "' is not used by " + to_string(config.experiment));
  std::string value;
  try {
    value = spec->canonicalize(raw);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + key + ": " + e.what());
  }
  config.entries[key] = {value, where};
}

void cross_check(const RunConfig& c) {
  const auto where = [&](const std::string& key) { return c.entries.at(key).source; };
  const auto conflict = [&](const char* a, const char* b) {
    if (c.has(a) && c.has(b))
      throw ConfigError(where(b) + ": '" + b + "' conflicts with '" + a + "' (" + where(a) + ")");
  };
  conflict("sites", "sizes");
  conflict("mass", "masses");
  conflict("times", "t_min");
  conflict("times", "t_max");
  conflict("times", "t_points");
  if (c.has("t_min") && c.has("t_max") && !(c.get_double("t_min", 0) < c.get_double("t_max", 0)))
    throw ConfigError(where("t_max") + ": t_max must exceed t_min");
  if (c.has("e_min") && c.has("e_max") && !(c.get_double("e_min", 0) < c.get_double("e_max", 0)))
    throw ConfigError(where("e_max") + ": e_max must exceed e_min");
  if (c.has("times") && c.experiment != E::nrl && c.get_doubles("times", {}).front() <= 0.0)
    throw ConfigError(where("times") + ": times must be > 0");
  if (c.has("v") && c.get_double("v", 1) == 0.0 &&
      c.get_string("kind", "bernoulli") != "constant_zero")
    throw ConfigError(where("v") + ": v must be > 0 for random potentials");
  if (c.experiment == E::delocalization && c.has("v")) {
    const double v = c.get_double("v", 0.5), light = c.get_double("c", 1.0);
    if (v > light * (1 + 1e-9) || std::abs(v - light / std::sqrt(2.0)) <= 1e-9 * light)
      throw ConfigError(where("v") + ": delocalization needs 0 < v <= c and v != c/sqrt2");
  }
}

template <class T, class Parse>
T lookup(const RunConfig& c, const std::string& key, T fallback, Parse parse) {
  const auto it = c.entries.find(key);
  return it == c.entries.end() ? fallback : parse(it->second.value);
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& n : kExperimentNames)
    if (n.experiment == e) return n.name;
  return "?";
}

Experiment experiment_from_string(const std::string& s) {
  for (const auto& n : kExperimentNames)
    if (s == n.name) return n.experiment;
  throw ConfigError("unknown experiment '" + s + "'");
}

std::vector<Experiment> all_experiments() {
  std::vector<Experiment> v;
  for (const auto& n : kExperimentNames) v.push_back(n.experiment);
  return v;
}

std::vector<std::string> config_keys(Experiment e) {
  std::vector<std::string> keys;
  for (const auto& k : key_table())
    if (applies(k, e)) keys.emplace_back(k.name);
  std::sort(keys.begin(), keys.end());
  return keys;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  return lookup(*this, key, fallback, parse_real);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return lookup(*this, key, fallback, parse_u64);
}

std::size_t RunConfig::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  return lookup(*this, key, fallback, [](const std::string& s) { return s == "true"; });
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  return lookup(*this, key, fallback, [](const std::string& s) { return s; });
}

std::vector<double> RunConfig::get_doubles(const std::string& key,
                                           std::vector<double> fallback) const {
  return lookup(*this, key, std::move(fallback), [](const std::string& s) {
    std::vector<double> v;
    for (const auto& item : split_list(s)) v.push_back(parse_real(item));
    return v;
  });
}

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key,
                                              std::vector<std::size_t> fallback) const {
  return lookup(*this, key, std::move(fallback), [](const std::string& s) {
    std::vector<std::size_t> v;
    for (const auto& item : split_list(s)) v.push_back(static_cast<std::size_t>(parse_u64(item)));
    return v;
  });
}

std::string RunConfig::canonical() const {
  std::string out = "experiment=" + to_string(experiment) + "\n";
  for (const auto& [k, e] : entries) out += k + "=" + e.value + "\n";
  return out;
}

RunConfig parse_config(Experiment experiment, const std::string& file_text,
                       const std::string& file_name, const std::vector<FlagValue>& flags) {
  RunConfig config;
  config.experiment = experiment;

  std::istringstream in(file_text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = file_name + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    if (key == "experiment") {
      if (value != to_string(experiment))
        throw ConfigError(where + ": file is for '" + value + "' but the command is '" +
                          to_string(experiment) + "'");
      continue;
    }
    if (config.has(key))
      throw ConfigError(where + ": '" + key + "' already set at " + config.entries[key].source);
    set_entry(config, key, value, where);
  }

  std::set<std::string> seen;
  for (const FlagValue& f : flags) {
    const std::string where = "flag " + f.flag;
    if (!seen.insert(f.key).second) throw ConfigError(where + ": '" + f.key + "' given twice");
    if (const auto it = config.entries.find(f.key); it != config.entries.end())
      config.overridden[f.key] = it->second;
    set_entry(config, f.key, f.value, where);
  }

  cross_check(config);

  if (config.has("out")) {
    config.out_dir = config.get_string("out", "");
  } else {
    const char* root = std::getenv(kOutputRootEnv);
    config.out_dir = std::filesystem::path(root && *root ? root : "runs") / to_string(experiment);
  }
  return config;
}

RunConfig load_config(Experiment experiment, const std::optional<std::filesystem::path>& file,
                      const std::vector<FlagValue>& flags) {
  std::string text, name = "<none>";
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    name = file->string();
  }
  return parse_config(experiment, text, name, flags);
}

}  // namespace diraclab
