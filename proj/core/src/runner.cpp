#include "diraclab/runner.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "diraclab/error.hpp"
#include "diraclab/report.hpp"
#include "diraclab/version.hpp"

namespace diraclab {

namespace {

unsigned threads_of(const RunConfig& c) {
  return static_cast<unsigned>(c.get_size("threads", 0));
}

std::uint64_t seed_of(const RunConfig& c) { return c.get_u64("seed", 1); }

DisorderSpec spec_of(const RunConfig& c, double default_v) {
  DisorderSpec spec;
  spec.v = c.get_double("v", default_v);
  spec.p = c.get_double("p", 0.5);
  spec.kind = disorder_kind_from_string(c.get_string("kind", "bernoulli"));
  spec.seed = seed_of(c);
  if (spec.kind == DisorderKind::constant_zero && !c.has("v")) spec.v = 0.0;
  spec.validate();
  return spec;
}

// Explicit times, a log grid from t_min/t_max/t_points, or empty so the
// experiment picks its own default.
std::vector<double> times_of(const RunConfig& c, double t_min, double t_max, std::size_t points) {
  if (c.has("times")) return c.get_doubles("times", {});
  if (!c.has("t_min") && !c.has("t_max") && !c.has("t_points")) return {};
  return log_time_grid(c.get_double("t_min", t_min), c.get_double("t_max", t_max),
                       c.get_size("t_points", points));
}

std::vector<std::size_t> sizes_of(const RunConfig& c, std::vector<std::size_t> fallback) {
  if (c.has("sites")) return {c.get_size("sites", 0)};
  return c.get_sizes("sizes", std::move(fallback));
}

ExperimentReport run_lyapunov_sweep(const RunConfig& c) {
  const double mass = c.get_double("mass", 0.0), light = c.get_double("c", 1.0);
  const DisorderSpec spec = spec_of(c, 0.5);
  EnergySweepOptions sweep;
  sweep.e_min = c.get_double("e_min", sweep.e_min);
  sweep.e_max = c.get_double("e_max", sweep.e_max);
  sweep.points = c.get_size("e_points", sweep.points);
  sweep.refine_levels = c.get_size("refine_levels", sweep.refine_levels);
  if (!(sweep.e_min < sweep.e_max)) throw ConfigError("e_max must exceed e_min");
  LyapunovOptions opts;
  opts.n_steps = c.get_size("n_steps", opts.n_steps);
  opts.n_realizations = c.get_size("realizations", opts.n_realizations);
  opts.first_stream = c.get_u64("stream", 0);
  opts.threads = threads_of(c);

  const CriticalEnergySet critical = critical_energies(mass, light, spec.v);
  const auto rows = lyapunov_sweep(spec, mass, light, sweep, opts);

  ExperimentReport r;
  r.experiment = "lyapunov-sweep";
  r.add_parameter("mass", mass);
  r.add_parameter("c", light);
  r.add_parameter("v", spec.v);
  r.add_parameter("p", spec.p);
  r.add_parameter("kind", to_string(spec.kind));
  r.add_parameter("n_steps", static_cast<double>(opts.n_steps));
  r.add_parameter("realizations", static_cast<double>(opts.n_realizations));
  r.add_parameter("regime", to_string(critical.regime));
  std::string list;
  for (double e : critical.energies) list += (list.empty() ? "" : ",") + std::to_string(e);
  r.add_parameter("critical_energies", list);
  r.provenance.emplace_back("version", kVersion);
  r.provenance.emplace_back("seed", std::to_string(spec.seed));
  r.provenance.emplace_back("first_stream", std::to_string(opts.first_stream));

  Table t{"lyapunov", {"energy", "gamma", "std_error", "loc_length", "n_steps", "n_realizations"},
          {}};
  double gamma_min = std::numeric_limits<double>::infinity();
  for (const auto& e : rows) {
    t.rows.push_back({e.energy, e.gamma, e.std_error, e.loc_length,
                      static_cast<double>(e.n_steps), static_cast<double>(e.n_realizations)});
    gamma_min = std::min(gamma_min, e.gamma);
  }
  r.add_measurement("gamma_min", gamma_min);
  r.tables.push_back(std::move(t));
  return r;
}

ExperimentReport run_critical(const RunConfig& c) {
  CriticalLyapunovParams p;
  p.mass = c.get_double("mass", 0.0);
  p.c = c.get_double("c", 1.0);
  p.v = c.get_double("v", 0.5);
  p.p = c.get_double("p", 0.5);
  p.seed = seed_of(c);
  p.lyapunov.n_steps = c.get_size("n_steps", p.lyapunov.n_steps);
  p.lyapunov.n_realizations = c.get_size("realizations", p.lyapunov.n_realizations);
  p.lyapunov.first_stream = c.get_u64("stream", 0);
  p.lyapunov.threads = threads_of(c);
  p.gamma_max = c.get_double("gamma_max", 0.0);
  spec_of(c, 0.5);
  return critical_lyapunov_experiment(p);
}

ExperimentReport run_moments(const RunConfig& c) {
  const LatticeConfig config{c.get_size("sites", 401),
                             boundary_from_string(c.get_string("boundary", "open")),
                             c.get_double("mass", 0.0), c.get_double("c", 1.0)};
  config.validate();
  const DisorderSpec spec = spec_of(c, 0.5);
  std::vector<double> times =
      times_of(c, 1.0, light_cone_time(config.n_sites, config.light_speed), 32);
  if (times.empty())
    times = log_time_grid(1.0, light_cone_time(config.n_sites, config.light_speed), 32);
  MomentOptions opts;
  opts.n_realizations = c.get_size("realizations", 4);
  opts.first_stream = c.get_u64("stream", 0);
  opts.initial = initial_state_from_string(c.get_string("initial", "upper_delta"));
  opts.threads = threads_of(c);

  const MomentSeries s = moment_series(config, spec, times, opts);

  ExperimentReport r;
  r.experiment = "moments";
  r.add_parameter("n_sites", static_cast<double>(config.n_sites));
  r.add_parameter("boundary", to_string(config.boundary));
  r.add_parameter("mass", config.mass);
  r.add_parameter("c", config.light_speed);
  r.add_parameter("v", spec.v);
  r.add_parameter("p", spec.p);
  r.add_parameter("kind", to_string(spec.kind));
  r.add_parameter("initial", to_string(opts.initial));
  r.add_parameter("realizations", static_cast<double>(opts.n_realizations));
  r.provenance.emplace_back("version", kVersion);
  r.provenance.emplace_back("seed", std::to_string(spec.seed));
  r.provenance.emplace_back("first_stream", std::to_string(opts.first_stream));
  r.add_measurement("M_final", s.values.back());
  r.add_measurement("edge_weight_max", s.edge_weight.back());
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < s.size(); ++i) flagged += s.flagged(i) ? 1 : 0;
  r.add_measurement("flagged_points", static_cast<double>(flagged));
  try {
    const GrowthFit fit = fit_growth_exponent(s, {times[times.size() / 2], times.back()});
    r.add_measurement("alpha_upper_half", fit.exponent);
    r.add_measurement("r_squared_upper_half", fit.r_squared);
  } catch (const InsufficientData&) {
    // Short grids are fine for a plain series; there is just no fit.
  }

  Table t{"moments", {"t", "M_mean", "M_stderr", "edge_weight_max"}, {}};
  for (std::size_t i = 0; i < s.size(); ++i)
    t.rows.push_back({s.times[i], s.values[i], s.std_error[i], s.edge_weight[i]});
  r.tables.push_back(std::move(t));
  return r;
}

ExperimentReport run_delocalization(const RunConfig& c) {
  DelocalizationParams p;
  p.c = c.get_double("c", p.c);
  p.v = c.get_double("v", p.v);
  p.p = c.get_double("p", p.p);
  p.sizes = sizes_of(c, p.sizes);
  const std::size_t largest = *std::max_element(p.sizes.begin(), p.sizes.end());
  p.times = times_of(c, 1.0, light_cone_time(largest, p.c), 48);
  p.fit_t_min = c.get_double("fit_t_min", p.fit_t_min);
  p.contrast_v = c.get_double("contrast_v", p.contrast_v);
  p.seed = seed_of(c);
  p.realizations = c.get_size("realizations", p.realizations);
  p.first_stream = c.get_u64("stream", 0);
  p.threads = threads_of(c);
  return delocalization_experiment(p);
}

ExperimentReport run_localization(const RunConfig& c) {
  LocalizationParams p;
  p.mass = c.get_double("mass", p.mass);
  p.c = c.get_double("c", p.c);
  p.v = c.get_double("v", p.v);
  p.p = c.get_double("p", p.p);
  p.sizes = sizes_of(c, p.sizes);
  p.times = times_of(c, 1.0, 4000.0, 64);
  p.seed = seed_of(c);
  p.realizations = c.get_size("realizations", p.realizations);
  p.first_stream = c.get_u64("stream", 0);
  p.threads = threads_of(c);
  return localization_experiment(p);
}

ExperimentReport run_mass_gap(const RunConfig& c) {
  MassGapParams p;
  if (c.has("mass")) {
    const double m = c.get_double("mass", 0.0);
    p.masses = {m, 2.0 * m};
  }
  p.masses = c.get_doubles("masses", p.masses);
  p.c = c.get_double("c", p.c);
  p.v = c.get_double("v", p.v);
  p.p = c.get_double("p", p.p);
  p.n_sites = c.get_size("sites", p.n_sites);
  p.times = times_of(c, 0.05, 20.0, 40);
  p.seed = seed_of(c);
  p.realizations = c.get_size("realizations", p.realizations);
  p.first_stream = c.get_u64("stream", 0);
  p.t_star_index = c.get_size("t_star_index", p.t_star_index);
  p.threads = threads_of(c);
  return mass_gap_experiment(p);
}

ExperimentReport run_nrl(const RunConfig& c) {
  NrlParams p;
  p.mass = c.get_double("mass", p.mass);
  p.speeds = c.get_doubles("speeds", p.speeds);
  p.v = c.get_double("v", p.v);
  p.p = c.get_double("p", p.p);
  p.n_sites = c.get_size("sites", p.n_sites);
  p.times = c.get_doubles("times", p.times);
  p.seed = seed_of(c);
  p.stream = c.get_u64("stream", 0);
  p.free_variant = c.get_bool("free_variant", p.free_variant);
  return nrl_experiment(p);
}

ExperimentReport run_zitter(const RunConfig& c) {
  ZitterParams p;
  p.mass = c.get_double("mass", p.mass);
  p.c = c.get_double("c", p.c);
  p.n_sites = c.get_size("sites", p.n_sites);
  p.width = c.get_double("width", p.width);
  p.momentum = c.get_double("momentum", p.momentum);
  p.t_max = c.get_double("t_max", p.t_max);
  p.samples = c.get_size("samples", p.samples);
  return zitterbewegung_experiment(p);
}

ExperimentReport run_eigenfunctions(const RunConfig& c) {
  EigenfunctionParams p;
  p.mass = c.get_double("mass", p.mass);
  p.c = c.get_double("c", p.c);
  const DisorderSpec spec = spec_of(c, p.v);
  p.v = spec.v;
  p.p = spec.p;
  p.kind = spec.kind;
  p.n_sites = c.get_size("sites", p.n_sites);
  p.energies = c.get_doubles("energies", p.energies);
  p.states_per_energy = c.get_size("states_per_energy", p.states_per_energy);
  p.realizations = c.get_size("realizations", p.realizations);
  p.seed = spec.seed;
  p.first_stream = c.get_u64("stream", 0);
  p.lyapunov_steps = c.get_size("n_steps", p.lyapunov_steps);
  p.threads = threads_of(c);
  return eigenfunction_decay(p);
}

}  // namespace

ExperimentReport execute(const RunConfig& config) {
  switch (config.experiment) {
    case Experiment::lyapunov_sweep: return run_lyapunov_sweep(config);
    case Experiment::critical_energies: return run_critical(config);
    case Experiment::moments: return run_moments(config);
    case Experiment::delocalization: return run_delocalization(config);
    case Experiment::localization: return run_localization(config);
    case Experiment::mass_gap: return run_mass_gap(config);
    case Experiment::nrl: return run_nrl(config);
    case Experiment::zitter: return run_zitter(config);
    case Experiment::eigenfunctions: return run_eigenfunctions(config);
  }
  throw InvalidInput("unhandled experiment");
}

std::string manifest_json(const RunConfig& config, const std::vector<std::string>& files) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["experiment"] = to_string(config.experiment);
  j["canonical_config"] = config.canonical();
  auto& sources = j["sources"] = nlohmann::ordered_json::object();
  for (const auto& [k, e] : config.entries) sources[k] = e.source;
  auto& over = j["overridden"] = nlohmann::ordered_json::object();
  for (const auto& [k, e] : config.overridden) over[k] = {{"value", e.value}, {"source", e.source}};
  j["seed"] = config.get_u64("seed", 1);
  j["first_stream"] = config.get_u64("stream", 0);
  j["check"] = config.check;
  j["files"] = files;
  return j.dump(2) + "\n";
}

int run(const RunConfig& config, std::ostream& log) {
  const ExperimentReport report = execute(config);
  std::vector<std::string> files = write_report(report, config.out_dir);
  files.insert(files.begin(), "manifest.json");
  write_file(config.out_dir / "manifest.json", manifest_json(config, files));

  for (const Check& c : report.checks)
    log << (c.passed() ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (bounds ["
        << c.lower << ", " << c.upper << "])\n";
  log << "wrote " << files.size() << " files to " << config.out_dir.string() << "\n";
  if (config.check && !report.passed()) return kExitCheckFailed;
  return kExitOk;
}

}  // namespace diraclab
