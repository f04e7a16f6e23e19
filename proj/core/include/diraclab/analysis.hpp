#pragma once

// Experiments that turn moment series, eigenvectors and Lyapunov exponents
// into measured numbers with declared pass/fail thresholds.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diraclab/disorder.hpp"
#include "diraclab/dynamics.hpp"
#include "diraclab/transfer.hpp"

namespace diraclab {

struct FitWindow {
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
};

struct GrowthFit {
  FitWindow window;  ///< span of the points actually used
  double exponent = 0.0;
  double intercept = 0.0;  ///< log M at log t = 0
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Least squares of log m against log t over points with t in the window.
/// Throws InsufficientData below 8 points.
GrowthFit fit_power_law(std::span<const double> t, std::span<const double> m, FitWindow window);

/// Same, skipping points whose edge weight is at or above flag_threshold.
GrowthFit fit_growth_exponent(const MomentSeries& series, FitWindow window,
                              double flag_threshold = 1e-6);

/// points values from t_min to t_max, evenly spaced in log t.
std::vector<double> log_time_grid(double t_min, double t_max, std::size_t points);

/// Largest t for which a front moving at speed c from the centre stays in the
/// central 90% of the lattice.
double light_cone_time(std::size_t n_sites, double c);

struct Check {
  std::string name;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool passed() const { return value >= lower && value <= upper; }
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<Table> tables;

  bool passed() const;
  /// Throws InvalidInput for unknown names.
  double measurement(const std::string& name) const;
  const Check& check(const std::string& name) const;

  void add_parameter(const std::string& key, const std::string& value);
  void add_parameter(const std::string& key, double value);
  void add_measurement(const std::string& key, double value) { measured.emplace_back(key, value); }
  void add_check(Check c) { checks.push_back(std::move(c)); }
};

// --- dynamics experiments -------------------------------------------------

struct DelocalizationParams {
  double v = 0.5;
  double c = 1.0;
  double p = 0.5;
  std::vector<std::size_t> sizes{2001};
  /// Empty: 48 log-spaced points from 1 to the light-cone time of each size.
  std::vector<double> times;
  double fit_t_min = 50.0;
  std::uint64_t seed = 1;
  std::size_t realizations = 16;
  std::uint64_t first_stream = 0;
  /// Localized contrast run with v = contrast_v under the same settings; 0 skips it.
  double contrast_v = 1.5;
  double alpha_min = 1.2;
  double contrast_alpha_max = 0.3;
  double r_squared_min = 0.9;
  unsigned threads = 1;
};

ExperimentReport delocalization_experiment(const DelocalizationParams& params);

struct LocalizationParams {
  double mass = 1.0;
  double v = 1.0;
  double c = 1.0;
  double p = 0.5;
  /// Saturation levels are compared between consecutive sizes. Odd sizes keep
  /// the launch site at coordinate 0.
  std::vector<std::size_t> sizes{301, 601};
  /// Empty: 64 log-spaced points from 1 to 4000. t_max / 2 is always added.
  std::vector<double> times;
  std::uint64_t seed = 1;
  std::size_t realizations = 16;
  std::uint64_t first_stream = 0;
  double rho_max = 1.1;
  double alpha_max = 0.3;
  double size_tolerance = 0.1;
  unsigned threads = 1;
};

/// Throws InvalidInput when (mass, c, v) has critical energies.
ExperimentReport localization_experiment(const LocalizationParams& params);

struct MassGapParams {
  std::vector<double> masses{1e-3, 2e-3};
  double c = 1.0;
  double v = 0.5;
  double p = 0.5;
  std::size_t n_sites = 121;
  /// Empty: 40 log-spaced points from 0.05 to 20. The stability check
  /// compares the full grid with its first half in t (t <= t_last / 2).
  std::vector<double> times;
  std::uint64_t seed = 1;
  std::size_t realizations = 8;
  std::uint64_t first_stream = 0;
  std::size_t t_star_index = 9;
  double ratio_min = 1.6;
  double ratio_max = 2.4;
  double stability = 0.3;
  unsigned threads = 1;
};

/// D_m(t) = |M^0(t) - M^m(t)| of ensemble means over common realizations.
ExperimentReport mass_gap_experiment(const MassGapParams& params);

struct NrlParams {
  double mass = 1.0;
  std::vector<double> speeds{5.0, 10.0, 20.0};
  double v = 0.5;
  double p = 0.5;
  std::size_t n_sites = 101;
  std::vector<double> times{1.0, 2.0, 5.0};
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  /// Repeat with V = 0.
  bool free_variant = true;
};

/// Upper Dirac component with the rest energy removed against Schrodinger
/// evolution from the same site and potential. Checks strict decrease in c at
/// the last time.
ExperimentReport nrl_experiment(const NrlParams& params);

struct ZitterParams {
  double mass = 0.05;
  double c = 1.0;
  std::size_t n_sites = 401;
  double width = 10.0;
  double momentum = 1.5707963267948966;
  double t_max = 150.0;
  std::size_t samples = 1024;
  double ehrenfest_t = 1.0;
  double ehrenfest_delta = 1e-3;
  double ehrenfest_tolerance = 1e-5;
  /// Periodic ring used for the spectrum and A^2 checks.
  std::size_t ring_sites = 64;
  double amplitude_min = 1e-3;  ///< in units of c
};

ExperimentReport zitterbewegung_experiment(const ZitterParams& params);

struct EigenfunctionParams {
  double mass = 1.0;
  double c = 1.0;
  double v = 1.0;
  double p = 0.5;
  DisorderKind kind = DisorderKind::bernoulli;
  std::size_t n_sites = 400;
  std::vector<double> energies{-2.5, -0.5, 0.0, 0.5, 2.5};
  std::size_t states_per_energy = 8;
  std::size_t realizations = 8;
  std::uint64_t seed = 1;
  std::uint64_t first_stream = 0;
  std::size_t core = 5;
  double edge_fraction = 0.1;
  double weight_floor = 1e-28;
  std::size_t lyapunov_steps = 200'000;
  std::size_t lyapunov_realizations = 8;
  double tolerance = 0.3;
  unsigned threads = 1;
};

struct DecayFit {
  double kappa = 0.0;  ///< amplitude decay rate, -slope / 2 of log weight
  double ipr = 0.0;
  std::size_t peak = 0;
  std::size_t n_points = 0;
};

/// Fits log(site weight) against distance from the peak on both flanks,
/// skipping `core` sites around the peak and the outer edge_fraction of the
/// chain, and stopping each flank at the first weight below floor.
/// Throws InsufficientData below 8 points.
DecayFit fit_decay(std::span<const double> weights, std::size_t core, double edge_fraction,
                   double floor);

ExperimentReport eigenfunction_decay(const EigenfunctionParams& params);

// --- transfer experiments -------------------------------------------------

struct CriticalLyapunovParams {
  double mass = 0.0;
  double c = 1.0;
  double v = 0.5;
  double p = 0.5;
  std::uint64_t seed = 1;
  LyapunovOptions lyapunov;
  /// Defaults to 1e-3, or 2e-3 in the v = c/sqrt2 massive regime.
  double gamma_max = 0.0;
};

/// gamma at every catalogue energy. For m = 0, v = c/sqrt2, gamma at E = +-v
/// is measured and reported without a check.
ExperimentReport critical_lyapunov_experiment(const CriticalLyapunovParams& params);

}  // namespace diraclab
