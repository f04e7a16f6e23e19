#include "diraclab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "diraclab/error.hpp"
#include "diraclab/parallel.hpp"
#include "diraclab/version.hpp"

namespace diraclab {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

Table moments_table(const std::string& name, const MomentSeries& s) {
  Table t{name, {"t", "M_mean", "M_stderr", "edge_weight_max"}, {}};
  for (std::size_t i = 0; i < s.size(); ++i)
    t.rows.push_back({s.times[i], s.values[i], s.std_error[i], s.edge_weight[i]});
  return t;
}

void add_common_provenance(ExperimentReport& r, std::uint64_t seed, std::uint64_t first_stream,
                           std::size_t realizations) {
  r.provenance.emplace_back("version", kVersion);
  r.provenance.emplace_back("seed", std::to_string(seed));
  r.provenance.emplace_back("streams", std::to_string(first_stream) + ".." +
                                           std::to_string(first_stream + realizations - 1));
}

void require_times(const std::vector<double>& times) {
  if (times.size() < 2) throw InsufficientData("time grid needs at least two points");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0)) throw InvalidInput("time grid must be positive");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw InvalidInput("time grid must be strictly increasing");
  }
}

}  // namespace

// --- fits -----------------------------------------------------------------

GrowthFit fit_power_law(std::span<const double> t, std::span<const double> m, FitWindow window) {
  if (t.size() != m.size()) throw InvalidInput("fit: times and values differ in length");
  if (!(window.t_min < window.t_max)) throw InvalidInput("fit: empty window");
  std::vector<double> x, y;
  double used_min = 0.0, used_max = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window.t_min || t[i] > window.t_max) continue;
    if (x.empty()) used_min = t[i];
    used_max = t[i];
    if (!(t[i] > 0.0) || !(m[i] > 0.0))
      throw InvalidInput("fit: power-law fit needs positive t and M (t = " + fmt(t[i]) + ")");
    x.push_back(std::log(t[i]));
    y.push_back(std::log(m[i]));
  }
  if (x.size() < 8)
    throw InsufficientData("fit: " + std::to_string(x.size()) +
                           " usable points in window, need at least 8");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("fit: all points at one time");
  GrowthFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.exponent * x[i];
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.window = {used_min, used_max};
  fit.n_points = x.size();
  return fit;
}

GrowthFit fit_growth_exponent(const MomentSeries& series, FitWindow window, double flag_threshold) {
  std::vector<double> t, m;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.flagged(i, flag_threshold)) continue;
    t.push_back(series.times[i]);
    m.push_back(series.values[i]);
  }
  return fit_power_law(t, m, window);
}

std::vector<double> log_time_grid(double t_min, double t_max, std::size_t points) {
  if (!(t_min > 0.0) || !(t_max > t_min) || points < 2)
    throw InvalidInput("log grid needs 0 < t_min < t_max and at least two points");
  std::vector<double> grid(points);
  const double step = std::log(t_max / t_min) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = t_min * std::exp(step * static_cast<double>(i));
  grid.back() = t_max;
  return grid;
}

double light_cone_time(std::size_t n_sites, double c) {
  if (!(c > 0.0)) throw InvalidInput("light speed must be positive");
  const double margin = std::max(1.0, std::floor(0.05 * static_cast<double>(n_sites)));
  const double reach = 0.5 * static_cast<double>(n_sites - 1) - margin;
  if (!(reach > 0.0)) throw InvalidInput("lattice too small for a light cone");
  return reach / c;
}

// --- report ---------------------------------------------------------------

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
}

double ExperimentReport::measurement(const std::string& name) const {
  for (const auto& [k, v] : measured)
    if (k == name) return v;
  throw InvalidInput("report " + experiment + " has no measurement '" + name + "'");
}

const Check& ExperimentReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw InvalidInput("report " + experiment + " has no check '" + name + "'");
}

void ExperimentReport::add_parameter(const std::string& key, const std::string& value) {
  parameters.emplace_back(key, value);
}

void ExperimentReport::add_parameter(const std::string& key, double value) {
  parameters.emplace_back(key, full(value));
}

// --- delocalization -------------------------------------------------------

ExperimentReport delocalization_experiment(const DelocalizationParams& params) {
  if (!(params.v > 0.0) || params.v > params.c * (1.0 + 1e-9) ||
      near(params.v, params.c / std::numbers::sqrt2))
    throw InvalidInput("delocalization needs 0 < v <= c and v != c/sqrt2");
  if (params.sizes.empty()) throw InvalidInput("delocalization: no lattice sizes");

  ExperimentReport report;
  report.experiment = "delocalization";
  report.add_parameter("mass", 0.0);
  report.add_parameter("c", params.c);
  report.add_parameter("v", params.v);
  report.add_parameter("p", params.p);
  report.add_parameter("realizations", static_cast<double>(params.realizations));
  report.add_parameter("fit_t_min", params.fit_t_min);
  report.add_parameter("contrast_v", params.contrast_v);
  add_common_provenance(report, params.seed, params.first_stream, params.realizations);

  MomentOptions options;
  options.n_realizations = params.realizations;
  options.first_stream = params.first_stream;
  options.threads = params.threads;

  for (std::size_t n : params.sizes) {
    const LatticeConfig config{n, Boundary::open, 0.0, params.c};
    const std::vector<double> times =
        params.times.empty() ? log_time_grid(1.0, light_cone_time(n, params.c), 48) : params.times;
    require_times(times);
    const FitWindow window{params.fit_t_min, times.back()};
    const std::string tag = "[N=" + std::to_string(n) + "]";

    DisorderSpec spec{params.v, params.p, DisorderKind::bernoulli, params.seed};
    const MomentSeries series = moment_series(config, spec, times, options);
    const GrowthFit fit = fit_growth_exponent(series, window);
    report.add_measurement("alpha" + tag, fit.exponent);
    report.add_measurement("r_squared" + tag, fit.r_squared);
    report.add_measurement("fit_points" + tag, static_cast<double>(fit.n_points));
    report.add_measurement("fit_t_max" + tag, fit.window.t_max);
    report.add_check({"alpha" + tag, fit.exponent, params.alpha_min});
    report.add_check({"r_squared" + tag, fit.r_squared, params.r_squared_min});
    report.tables.push_back(moments_table("moments_N" + std::to_string(n), series));

    if (params.contrast_v > 0.0) {
      spec.v = params.contrast_v;
      const MomentSeries contrast = moment_series(config, spec, times, options);
      const GrowthFit cfit = fit_growth_exponent(contrast, window);
      report.add_measurement("contrast_alpha" + tag, cfit.exponent);
      report.add_measurement("contrast_r_squared" + tag, cfit.r_squared);
      report.add_check({"contrast_alpha" + tag, cfit.exponent,
                        -std::numeric_limits<double>::infinity(), params.contrast_alpha_max});
      report.tables.push_back(moments_table("contrast_moments_N" + std::to_string(n), contrast));
    }
  }
  return report;
}

// --- localization ---------------------------------------------------------

ExperimentReport localization_experiment(const LocalizationParams& params) {
  if (critical_energies(params.mass, params.c, params.v).regime != CriticalRegime::none)
    throw InvalidInput("localization: (m, c, v) has critical energies");
  if (params.sizes.empty()) throw InvalidInput("localization: no lattice sizes");

  std::vector<double> times = params.times.empty() ? log_time_grid(1.0, 4000.0, 64) : params.times;
  require_times(times);
  const double t_max = times.back();
  if (std::find(times.begin(), times.end(), 0.5 * t_max) == times.end()) {
    times.push_back(0.5 * t_max);
    std::sort(times.begin(), times.end());
  }
  const auto half_index = static_cast<std::size_t>(
      std::find(times.begin(), times.end(), 0.5 * t_max) - times.begin());
  const std::size_t last = times.size() - 1;

  ExperimentReport report;
  report.experiment = "localization";
  report.add_parameter("mass", params.mass);
  report.add_parameter("c", params.c);
  report.add_parameter("v", params.v);
  report.add_parameter("p", params.p);
  report.add_parameter("realizations", static_cast<double>(params.realizations));
  report.add_parameter("t_max", t_max);
  add_common_provenance(report, params.seed, params.first_stream, params.realizations);

  MomentOptions options;
  options.n_realizations = params.realizations;
  options.first_stream = params.first_stream;
  options.threads = params.threads;
  const DisorderSpec spec{params.v, params.p, DisorderKind::bernoulli, params.seed};
  const double nan = std::numeric_limits<double>::quiet_NaN();

  double previous_level = nan;
  std::size_t previous_n = 0;
  for (std::size_t n : params.sizes) {
    const LatticeConfig config{n, Boundary::open, params.mass, params.c};
    const MomentSeries series = moment_series(config, spec, times, options);
    const std::string tag = "[N=" + std::to_string(n) + "]";

    // A truncation-contaminated endpoint makes the ratio meaningless.
    const bool clean = !series.flagged(last) && !series.flagged(half_index);
    const double rho = clean ? series.values[last] / series.values[half_index] : nan;
    const GrowthFit fit = fit_growth_exponent(series, {0.25 * t_max, t_max});
    const double level = series.flagged(last) ? nan : series.values[last];

    report.add_measurement("rho" + tag, rho);
    report.add_measurement("alpha_late" + tag, fit.exponent);
    report.add_measurement("r_squared_late" + tag, fit.r_squared);
    report.add_measurement("saturation" + tag, level);
    report.add_measurement("edge_weight_max" + tag, series.edge_weight[last]);
    report.add_check({"rho" + tag, rho, -std::numeric_limits<double>::infinity(), params.rho_max});
    report.add_check({"alpha_late" + tag, fit.exponent, -std::numeric_limits<double>::infinity(),
                      params.alpha_max});
    if (previous_n != 0) {
      const double change = std::abs(level - previous_level) / previous_level;
      const std::string name =
          "size_change[N=" + std::to_string(previous_n) + "->" + std::to_string(n) + "]";
      report.add_measurement(name, change);
      report.add_check({name, change, -std::numeric_limits<double>::infinity(),
                        params.size_tolerance});
    }
    previous_level = level;
    previous_n = n;
    report.tables.push_back(moments_table("moments_N" + std::to_string(n), series));
  }
  return report;
}

// --- mass gap -------------------------------------------------------------

ExperimentReport mass_gap_experiment(const MassGapParams& params) {
  if (params.masses.empty()) throw InvalidInput("mass gap: no masses");
  for (double m : params.masses)
    if (!(m >= 0.0)) throw InvalidInput("mass gap: masses must be >= 0");
  const std::vector<double> times =
      params.times.empty() ? log_time_grid(0.05, 20.0, 40) : params.times;
  require_times(times);
  const double t_half = 0.5 * times.back();

  ExperimentReport report;
  report.experiment = "mass-gap";
  report.add_parameter("c", params.c);
  report.add_parameter("v", params.v);
  report.add_parameter("p", params.p);
  report.add_parameter("n_sites", static_cast<double>(params.n_sites));
  report.add_parameter("realizations", static_cast<double>(params.realizations));
  std::string mass_list;
  for (double m : params.masses) mass_list += (mass_list.empty() ? "" : ",") + full(m);
  report.add_parameter("masses", mass_list);
  add_common_provenance(report, params.seed, params.first_stream, params.realizations);

  MomentOptions options;
  options.n_realizations = params.realizations;
  options.first_stream = params.first_stream;
  options.threads = params.threads;
  const DisorderSpec spec{params.v, params.p, DisorderKind::bernoulli, params.seed};

  const auto series_for = [&](double m) {
    return moment_series({params.n_sites, Boundary::open, m, params.c}, spec, times, options);
  };
  const MomentSeries base = series_for(0.0);
  const double c2 = params.c * params.c;

  std::vector<std::pair<double, std::vector<double>>> gaps;  // mass -> D(t)
  for (double m : params.masses) {
    const MomentSeries s = m == 0.0 ? base : series_for(m);
    std::vector<double> d(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) d[i] = std::abs(base.values[i] - s.values[i]);
    const std::string tag = "[m=" + fmt(m) + "]";

    Table table{"mass_gap_m" + fmt(m), {"t", "M0", "Mm", "D", "D_over_mc2t4", "envelope"}, {}};
    if (m == 0.0) {
      report.add_measurement("D_max" + tag, *std::max_element(d.begin(), d.end()));
      for (std::size_t i = 0; i < times.size(); ++i)
        table.rows.push_back({times[i], base.values[i], s.values[i], d[i], 0.0, 0.0});
    } else {
      double sup_full = 0.0, sup_half = 0.0;
      std::vector<double> ratio(times.size());
      for (std::size_t i = 0; i < times.size(); ++i) {
        ratio[i] = d[i] / (m * c2 * std::pow(times[i], 4));
        if (base.flagged(i) || s.flagged(i)) continue;
        sup_full = std::max(sup_full, ratio[i]);
        if (times[i] <= t_half) sup_half = std::max(sup_half, ratio[i]);
      }
      for (std::size_t i = 0; i < times.size(); ++i)
        table.rows.push_back({times[i], base.values[i], s.values[i], d[i], ratio[i],
                              sup_full * m * c2 * std::pow(times[i], 4)});
      const double stability = sup_full / sup_half;
      report.add_measurement("C_sup" + tag, sup_full);
      report.add_measurement("C_sup_half_window" + tag, sup_half);
      report.add_check({"C_stability" + tag, stability, 1.0 - params.stability,
                        1.0 + params.stability});
    }
    report.tables.push_back(std::move(table));
    gaps.emplace_back(m, std::move(d));
  }

  // Linearity in m at an early grid point.
  double m1 = std::numeric_limits<double>::infinity();
  for (double m : params.masses)
    if (m > 0.0) m1 = std::min(m1, m);
  const auto find = [&](double m) {
    return std::find_if(gaps.begin(), gaps.end(), [&](const auto& g) { return near(g.first, m); });
  };
  const auto g1 = find(m1), g2 = find(2.0 * m1);
  if (std::isfinite(m1) && g2 != gaps.end()) {
    if (params.t_star_index >= times.size())
      throw InvalidInput("mass gap: t_star_index beyond the grid");
    const std::size_t i = params.t_star_index;
    const double ratio = g2->second[i] / g1->second[i];
    report.add_measurement("t_star", times[i]);
    report.add_measurement("linearity_ratio", ratio);
    report.add_check({"linearity_ratio", ratio, params.ratio_min, params.ratio_max});
  }
  return report;
}

// --- nonrelativistic limit ------------------------------------------------

ExperimentReport nrl_experiment(const NrlParams& params) {
  if (!(params.mass > 0.0)) throw InvalidInput("nrl: mass must be positive");
  if (params.speeds.size() < 2) throw InvalidInput("nrl: need at least two light speeds");
  for (double t : params.times)
    if (!(t >= 0.0)) throw InvalidInput("nrl: times must be >= 0");
  if (params.times.empty()) throw InvalidInput("nrl: no times");
  std::vector<double> speeds = params.speeds;
  std::sort(speeds.begin(), speeds.end());

  ExperimentReport report;
  report.experiment = "nrl";
  report.add_parameter("mass", params.mass);
  report.add_parameter("v", params.v);
  report.add_parameter("p", params.p);
  report.add_parameter("n_sites", static_cast<double>(params.n_sites));
  report.provenance.emplace_back("version", kVersion);
  report.provenance.emplace_back("seed", std::to_string(params.seed));
  report.provenance.emplace_back("stream", std::to_string(params.stream));

  const std::size_t n = params.n_sites;
  const std::size_t centre = n / 2;

  const auto run = [&](const DisorderSpec& spec, const std::string& prefix) {
    const PotentialRealization potential = sample_potential(spec, n, params.stream);
    const EvolutionPlan schrodinger =
        diagonalize(build_schrodinger({n, Boundary::open, params.mass, 1.0}, potential));
    const SpinorState phi0 = SpinorState::scalar_basis(n, centre);
    const SpinorState psi0 = SpinorState::basis(n, centre, Component::upper);

    Table table{prefix + "nrl_error", {"c", "t", "epsilon"}, {}};
    std::vector<double> last_eps;
    for (double c : speeds) {
      const EvolutionPlan dirac =
          diagonalize(build_dirac({n, Boundary::open, params.mass, c}, potential));
      double eps = 0.0;
      for (double t : params.times) {
        const SpinorState psi = evolve_state(dirac, psi0, t);
        const SpinorState phi = evolve_state(schrodinger, phi0, t);
        const std::complex<double> rest = std::polar(1.0, params.mass * c * c * t);
        eps = (psi.upper_component() * rest - phi.amplitudes()).norm();
        table.rows.push_back({c, t, eps});
      }
      report.add_measurement(prefix + "epsilon[c=" + fmt(c) + "]", eps);
      last_eps.push_back(eps);
    }
    for (std::size_t i = 1; i < speeds.size(); ++i) {
      const double ratio = last_eps[i] / last_eps[i - 1];
      report.add_check({prefix + "decrease[c=" + fmt(speeds[i - 1]) + "->" + fmt(speeds[i]) + "]",
                        ratio, -std::numeric_limits<double>::infinity(),
                        std::nextafter(1.0, 0.0)});
    }
    report.tables.push_back(std::move(table));
  };

  run({params.v, params.p, DisorderKind::bernoulli, params.seed}, "");
  if (params.free_variant) run({0.0, params.p, DisorderKind::constant_zero, params.seed}, "free_");
  report.add_parameter("t_check", params.times.back());
  return report;
}

// --- zitterbewegung -------------------------------------------------------

ExperimentReport zitterbewegung_experiment(const ZitterParams& params) {
  if (params.samples < 16) throw InvalidInput("zitter: need at least 16 samples");
  if (!(params.t_max > 0.0)) throw InvalidInput("zitter: t_max must be positive");
  const double c = params.c;

  ExperimentReport report;
  report.experiment = "zitter";
  report.add_parameter("mass", params.mass);
  report.add_parameter("c", c);
  report.add_parameter("n_sites", static_cast<double>(params.n_sites));
  report.add_parameter("width", params.width);
  report.add_parameter("momentum", params.momentum);
  report.add_parameter("t_max", params.t_max);
  report.provenance.emplace_back("version", kVersion);

  // Operator identities on a ring.
  {
    const LatticeConfig ring{params.ring_sites, Boundary::periodic, params.mass, c};
    const HermitianOperator velocity = velocity_operator(ring);
    const Eigen::VectorXd lambda = hermitian_eigenvalues(velocity);
    const double spectrum_error = (lambda.cwiseAbs().array() - c).abs().maxCoeff();
    const Eigen::MatrixXcd a = velocity.dense() / c;
    const double square_error =
        (a * a - Eigen::MatrixXcd::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff();
    report.add_measurement("ring_spectrum_error", spectrum_error);
    report.add_measurement("ring_A_squared_error", square_error);
    report.add_check({"ring_spectrum_error", spectrum_error, 0.0, 1e-10});
    report.add_check({"ring_A_squared_error", square_error, 0.0, 1e-14});
  }

  const std::size_t n = params.n_sites;
  const LatticeConfig config{n, Boundary::open, params.mass, c};
  const std::vector<double> zero(n, 0.0);
  const EvolutionPlan plan = diagonalize(build_dirac(config, zero));
  const HermitianOperator velocity = velocity_operator(config);
  const SpinorState psi0 = SpinorState::gaussian(n, 2, static_cast<double>(n / 2), params.width,
                                                 params.momentum, Component::upper);

  // Ehrenfest: d<n>/dt = <cA>.
  {
    const double t = params.ehrenfest_t, h = params.ehrenfest_delta;
    const double forward = mean_position(evolve_state(plan, psi0, t + h));
    const double backward = mean_position(evolve_state(plan, psi0, t - h));
    const double derivative = (forward - backward) / (2.0 * h);
    const double v = mean_position_and_velocity(plan, psi0, t, velocity).velocity;
    report.add_measurement("ehrenfest_derivative", derivative);
    report.add_measurement("ehrenfest_velocity", v);
    report.add_check({"ehrenfest_error", std::abs(derivative - v), 0.0,
                      params.ehrenfest_tolerance});
  }

  // Velocity trace.
  const std::size_t k = params.samples;
  const double dt = params.t_max / static_cast<double>(k - 1);
  std::vector<double> times(k), vel(k), pos(k);
  double max_edge = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    times[i] = dt * static_cast<double>(i);
    const SpinorState psi = evolve_state(plan, psi0, times[i]);
    vel[i] = expectation(velocity, psi);
    pos[i] = mean_position(psi);
    max_edge = std::max(max_edge, edge_weight(psi));
  }
  const double mean_v = std::accumulate(vel.begin(), vel.end(), 0.0) / static_cast<double>(k);
  std::vector<double> residual(k);
  double amplitude = 0.0, max_abs_v = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    residual[i] = vel[i] - mean_v;
    amplitude = std::max(amplitude, std::abs(residual[i]));
    max_abs_v = std::max(max_abs_v, std::abs(vel[i]));
  }

  // Periodogram of the Hann-windowed residual on a grid 8x finer than the
  // natural resolution, skipping the lowest four bins.
  const double span = params.t_max;
  const double d_omega = 2.0 * std::numbers::pi / span / 8.0;
  const double nyquist = std::numbers::pi / dt;
  double peak_omega = 0.0, peak_power = -1.0;
  std::vector<double> window(k);
  for (std::size_t i = 0; i < k; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(k - 1)));
  for (double omega = 32.0 * d_omega; omega <= nyquist; omega += d_omega) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      acc += window[i] * residual[i] * std::polar(1.0, -omega * times[i]);
    if (std::norm(acc) > peak_power) {
      peak_power = std::norm(acc);
      peak_omega = omega;
    }
  }

  // Energy band occupied by the packet: central 99% of its spectral weight in |E|.
  const Eigen::VectorXcd coeff = plan.to_eigenbasis(psi0.amplitudes());
  std::vector<std::pair<double, double>> occupation;
  for (Eigen::Index j = 0; j < coeff.size(); ++j)
    occupation.emplace_back(std::abs(plan.eigenvalues()(j)), std::norm(coeff(j)));
  std::sort(occupation.begin(), occupation.end());
  double cumulative = 0.0, e_lo = occupation.front().first, e_hi = occupation.back().first;
  bool have_lo = false;
  for (const auto& [e, w] : occupation) {
    cumulative += w;
    if (!have_lo && cumulative >= 0.005) {
      e_lo = e;
      have_lo = true;
    }
    if (cumulative >= 0.995) {
      e_hi = e;
      break;
    }
  }

  report.add_measurement("velocity_t0", vel.front());
  report.add_measurement("velocity_mean", mean_v);
  report.add_measurement("residual_amplitude", amplitude);
  report.add_measurement("peak_frequency", peak_omega);
  report.add_measurement("band_lower", 2.0 * e_lo);
  report.add_measurement("band_upper", 2.0 * e_hi);
  report.add_measurement("max_abs_velocity", max_abs_v);
  report.add_measurement("edge_weight_max", max_edge);
  report.add_check({"peak_frequency_in_band", peak_omega, 2.0 * e_lo, 2.0 * e_hi});
  report.add_check({"residual_amplitude", amplitude, params.amplitude_min * c});
  report.add_check({"max_abs_velocity", max_abs_v, 0.0, c * (1.0 + 1e-12)});
  report.add_check({"edge_weight_max", max_edge, 0.0, 1e-8});

  Table trace{"zitter_trace", {"t", "position", "velocity", "residual"}, {}};
  for (std::size_t i = 0; i < k; ++i) trace.rows.push_back({times[i], pos[i], vel[i], residual[i]});
  report.tables.push_back(std::move(trace));
  return report;
}

// --- eigenfunction decay --------------------------------------------------

DecayFit fit_decay(std::span<const double> weights, std::size_t core, double edge_fraction,
                   double floor) {
  const std::size_t n = weights.size();
  if (n < 4) throw InvalidInput("decay fit: too few sites");
  const auto peak = static_cast<std::size_t>(
      std::max_element(weights.begin(), weights.end()) - weights.begin());
  const auto margin = static_cast<std::ptrdiff_t>(std::floor(edge_fraction * static_cast<double>(n)));
  const std::ptrdiff_t lo = margin, hi = static_cast<std::ptrdiff_t>(n) - 1 - margin;

  std::vector<double> x, y;
  for (int dir : {-1, 1}) {
    for (std::ptrdiff_t d = static_cast<std::ptrdiff_t>(core) + 1;; ++d) {
      const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak) + dir * d;
      if (i < lo || i > hi || !(weights[static_cast<std::size_t>(i)] >= floor)) break;
      x.push_back(static_cast<double>(d));
      y.push_back(std::log(weights[static_cast<std::size_t>(i)]));
    }
  }
  if (x.size() < 8)
    throw InsufficientData("decay fit: " + std::to_string(x.size()) + " flank points, need 8");
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("decay fit: degenerate flank");

  DecayFit fit;
  fit.kappa = -0.5 * sxy / sxx;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double w : weights) fit.ipr += (w / total) * (w / total);
  fit.peak = peak;
  fit.n_points = x.size();
  return fit;
}

ExperimentReport eigenfunction_decay(const EigenfunctionParams& params) {
  if (params.energies.empty()) throw InvalidInput("eigenfunctions: no target energies");
  const std::size_t n = params.n_sites;
  const LatticeConfig config{n, Boundary::open, params.mass, params.c};
  config.validate();
  const DisorderSpec spec{params.v, params.p, params.kind, params.seed};
  spec.validate();

  ExperimentReport report;
  report.experiment = "eigenfunctions";
  report.add_parameter("mass", params.mass);
  report.add_parameter("c", params.c);
  report.add_parameter("v", params.v);
  report.add_parameter("p", params.p);
  report.add_parameter("kind", to_string(params.kind));
  report.add_parameter("n_sites", static_cast<double>(n));
  report.add_parameter("realizations", static_cast<double>(params.realizations));
  report.add_parameter("states_per_energy", static_cast<double>(params.states_per_energy));
  report.add_parameter("weight_floor", params.weight_floor);
  add_common_provenance(report, params.seed, params.first_stream, params.realizations);

  struct Sample {
    std::size_t target;
    double energy;
    DecayFit fit;
  };
  const std::size_t n_targets = params.energies.size();
  std::vector<std::vector<Sample>> per_realization(params.realizations);
  std::vector<std::size_t> skipped(params.realizations, 0);
  parallel_for(params.realizations, params.threads, [&](std::size_t r) {
    const PotentialRealization potential = sample_potential(spec, n, params.first_stream + r);
    const EvolutionPlan plan = diagonalize(build_dirac(config, potential));
    const Eigen::VectorXd& ev = plan.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ev.size()));
    for (std::size_t a = 0; a < n_targets; ++a) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      const double e0 = params.energies[a];
      const std::size_t take = std::min(params.states_per_energy, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                        order.end(), [&](Eigen::Index i, Eigen::Index j) {
                          return std::abs(ev(i) - e0) < std::abs(ev(j) - e0);
                        });
      for (std::size_t q = 0; q < take; ++q) {
        const Eigen::VectorXcd u = plan.eigenvector(order[q]);
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i)
          w[i] = std::norm(u(static_cast<Eigen::Index>(i))) +
                 std::norm(u(static_cast<Eigen::Index>(n + i)));
        try {
          per_realization[r].push_back(
              {a, ev(order[q]), fit_decay(w, params.core, params.edge_fraction, params.weight_floor)});
        } catch (const InsufficientData&) {
          ++skipped[r];
        }
      }
    }
  });

  Table table{"eigenstates", {"target", "energy", "kappa", "ipr", "peak", "points"}, {}};
  std::vector<std::vector<double>> kappas(n_targets), iprs(n_targets), offsets(n_targets);
  std::vector<double> all_kappa;
  for (const auto& samples : per_realization)
    for (const Sample& s : samples) {
      kappas[s.target].push_back(s.fit.kappa);
      iprs[s.target].push_back(s.fit.ipr);
      offsets[s.target].push_back(std::abs(s.energy - params.energies[s.target]));
      all_kappa.push_back(s.fit.kappa);
      table.rows.push_back({params.energies[s.target], s.energy, s.fit.kappa, s.fit.ipr,
                            static_cast<double>(s.fit.peak), static_cast<double>(s.fit.n_points)});
    }
  report.add_measurement("skipped_states",
                         static_cast<double>(std::accumulate(skipped.begin(), skipped.end(),
                                                             std::size_t{0})));
  const double overall = median(all_kappa);
  report.add_measurement("median_kappa", overall);
  report.add_check({"median_kappa", overall, std::numeric_limits<double>::min()});

  LyapunovOptions lyap;
  lyap.n_steps = params.lyapunov_steps;
  lyap.n_realizations = params.lyapunov_realizations;
  lyap.first_stream = params.first_stream;
  lyap.threads = params.threads;
  Table compare{"kappa_vs_gamma",
                {"energy", "median_kappa", "median_ipr", "mean_offset", "gamma", "gamma_stderr"},
                {}};
  for (std::size_t a = 0; a < n_targets; ++a) {
    const double e0 = params.energies[a];
    const std::string tag = "[E=" + fmt(e0) + "]";
    const double kappa = median(kappas[a]);
    const double ipr = median(iprs[a]);
    const double offset = offsets[a].empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : std::accumulate(offsets[a].begin(), offsets[a].end(), 0.0) /
                                    static_cast<double>(offsets[a].size());
    const LyapunovEstimate g = lyapunov_exponent(e0, spec, params.mass, params.c, lyap);
    report.add_measurement("kappa" + tag, kappa);
    report.add_measurement("ipr" + tag, ipr);
    report.add_measurement("gamma" + tag, g.gamma);
    report.add_measurement("energy_offset" + tag, offset);
    compare.rows.push_back({e0, kappa, ipr, offset, g.gamma, g.std_error});
    if (g.resolved_from_zero()) {
      const double rel = std::abs(kappa - g.gamma) / g.gamma;
      report.add_check({"kappa_vs_gamma" + tag, rel, 0.0, params.tolerance});
    }
  }
  report.tables.push_back(std::move(compare));
  report.tables.push_back(std::move(table));
  return report;
}

// --- critical energies ----------------------------------------------------

ExperimentReport critical_lyapunov_experiment(const CriticalLyapunovParams& params) {
  const CriticalEnergySet set = critical_energies(params.mass, params.c, params.v);
  std::vector<double> energies = set.energies;
  bool checked = true;
  // Excluded massless value: measured, no claim.
  if (set.regime == CriticalRegime::none && params.mass == 0.0 &&
      near(params.v, params.c / std::numbers::sqrt2)) {
    energies = {-params.v, params.v};
    checked = false;
  }
  double gamma_max = params.gamma_max;
  if (!(gamma_max > 0.0))
    gamma_max = set.regime == CriticalRegime::massive_v_eq_c_over_sqrt2 ? 2e-3 : 1e-3;

  ExperimentReport report;
  report.experiment = "critical-energies";
  report.add_parameter("mass", params.mass);
  report.add_parameter("c", params.c);
  report.add_parameter("v", params.v);
  report.add_parameter("p", params.p);
  report.add_parameter("n_steps", static_cast<double>(params.lyapunov.n_steps));
  report.add_parameter("realizations", static_cast<double>(params.lyapunov.n_realizations));
  report.add_parameter("regime", to_string(set.regime));
  add_common_provenance(report, params.seed, params.lyapunov.first_stream,
                        params.lyapunov.n_realizations);

  const DisorderSpec spec{params.v, params.p, DisorderKind::bernoulli, params.seed};
  Table table{"critical_lyapunov", {"energy", "gamma", "std_error", "n_steps", "n_realizations"}, {}};
  for (double e : energies) {
    const LyapunovEstimate g = lyapunov_exponent(e, spec, params.mass, params.c, params.lyapunov);
    const std::string tag = "[E=" + fmt(e) + "]";
    report.add_measurement("gamma" + tag, g.gamma);
    report.add_measurement("std_error" + tag, g.std_error);
    if (checked) report.add_check({"gamma" + tag, g.gamma, 0.0, gamma_max});
    table.rows.push_back({e, g.gamma, g.std_error, static_cast<double>(g.n_steps),
                          static_cast<double>(g.n_realizations)});
  }
  report.tables.push_back(std::move(table));
  return report;
}

}  // namespace diraclab
