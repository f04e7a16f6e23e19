#pragma once

// Transfer matrices of the Dirac eigen-equation and Lyapunov exponents.
//
// For (H_D - E) Psi = 0 the pair (psi+_{n+1}, psi-_n) follows from
// (psi+_n, psi-_{n-1}) through
//
//   T = [[1 + (m^2 c^4 - (E - V)^2) / c^2, (m c^2 + E - V) / c],
//        [(m c^2 - E + V) / c,              1                ]],
//
// a real matrix with unit determinant.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diraclab/disorder.hpp"
#include "diraclab/lattice.hpp"

namespace diraclab {

struct TransferMatrix {
  Eigen::Matrix2d entries = Eigen::Matrix2d::Identity();

  double determinant() const { return entries.determinant(); }
  double trace() const { return entries.trace(); }
};

TransferMatrix transfer_matrix(double energy, double potential, double mass, double c);

/// max |eigenvalue|; 1 when |trace| <= 2, else (|tr| + sqrt(tr^2 - 4)) / 2.
/// Exact for unit-determinant matrices, which every transfer matrix is.
double spectral_radius(const TransferMatrix& t);

struct TransferProduct {
  double log_norm_sum = 0.0;  ///< log of the operator 2-norm of the full product
  Eigen::Matrix2d frame = Eigen::Matrix2d::Identity();  ///< product / its 2-norm
};

/// Running product T_N ... T_1, rescaled whenever its Frobenius norm tops 1e100.
TransferProduct propagate_transfer(double energy, std::span<const double> potential, double mass,
                                   double c);
TransferProduct propagate_transfer(double energy, const PotentialRealization& potential,
                                   const LatticeConfig& config);

/// Solution of the eigen-equation generated by the transfer recursion.
///
/// Starts from (psi+_0, psi-_{-1}) = initial and returns psi+_0..psi+_{N-1} in
/// the upper block, psi-_0..psi-_{N-1} in the lower block.
Eigen::VectorXd transfer_solution(double energy, std::span<const double> potential, double mass,
                                  double c, const Eigen::Vector2d& initial);

struct LyapunovEstimate {
  double energy = 0.0;
  double gamma = 0.0;  ///< nats per site
  std::size_t n_steps = 0;
  std::size_t n_realizations = 0;
  double std_error = 0.0;
  /// 1 / gamma, or +infinity when gamma <= 3 std_error.
  double loc_length = std::numeric_limits<double>::infinity();

  bool resolved_from_zero() const { return gamma > 3.0 * std_error; }
};

struct LyapunovOptions {
  std::size_t n_steps = 1'000'000;
  std::size_t n_realizations = 32;
  std::uint64_t first_stream = 0;  ///< realizations use streams first_stream + r
  unsigned threads = 1;
};

/// Ensemble mean of log_norm_sum / n_steps over independent potential streams.
LyapunovEstimate lyapunov_exponent(double energy, const DisorderSpec& spec, double mass, double c,
                                   const LyapunovOptions& options);

enum class CriticalRegime { massless, massive_v_eq_special, massive_v_eq_c_over_sqrt2, none };

std::string to_string(CriticalRegime regime);

struct CriticalEnergySet {
  std::vector<double> energies;  ///< sorted ascending
  CriticalRegime regime = CriticalRegime::none;
};

/// Energies at which the Lyapunov exponent of the Bernoulli Dirac model vanishes:
///   m = 0, 0 < v <= c, v != c/sqrt2:   E = +-v
///   m > 0, v = c sqrt(2 + m^2 c^2):    E = 0
///   m > 0, v = c/sqrt2:                E = +-c/sqrt2 +- c sqrt(2 + m^2 c^2)
/// Equalities in v are tested with relative tolerance 1e-9.
CriticalEnergySet critical_energies(double mass, double c, double v);

struct EnergySweepOptions {
  double e_min = -2.0;
  double e_max = 2.0;
  std::size_t points = 41;
  /// Extra points at E_c +- spacing * 2^-k, k = 1..refine_levels, around each
  /// catalogue energy inside [e_min, e_max].
  std::size_t refine_levels = 4;
};

std::vector<double> sweep_energies(const EnergySweepOptions& sweep,
                                   const CriticalEnergySet& critical);

std::vector<LyapunovEstimate> lyapunov_sweep(const DisorderSpec& spec, double mass, double c,
                                             const EnergySweepOptions& sweep,
                                             const LyapunovOptions& options);

/// Columns energy,gamma,std_error,loc_length,n_steps,n_realizations.
void write_sweep_csv(std::ostream& os, const std::vector<LyapunovEstimate>& rows);

}  // namespace diraclab
