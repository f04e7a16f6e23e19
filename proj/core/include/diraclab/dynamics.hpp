#pragma once

// Exact unitary evolution on a finite lattice via the spectral decomposition
// H = U diag(lambda) U^dagger, and the time-averaged second moment
//
//   M(t) = (1/t) int_0^t sum_n coord(n)^2 (|psi+_n(s)|^2 + |psi-_n(s)|^2) ds
//
// evaluated in closed form in the eigenbasis.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diraclab/disorder.hpp"
#include "diraclab/lattice.hpp"

namespace diraclab {

class EvolutionPlan {
 public:
  EvolutionPlan() = default;
  EvolutionPlan(Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors, std::size_t n_sites,
                int components, std::string label);
  EvolutionPlan(Eigen::VectorXd eigenvalues, Eigen::MatrixXcd vectors, std::size_t n_sites,
                int components, std::string label);

  Eigen::Index dimension() const { return eigenvalues_.size(); }
  std::size_t n_sites() const { return n_sites_; }
  int components() const { return components_; }
  const std::string& label() const { return label_; }

  /// Ascending.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  bool is_real() const { return complex_vectors_.size() == 0; }
  const Eigen::MatrixXd& real_vectors() const { return real_vectors_; }
  const Eigen::MatrixXcd& complex_vectors() const { return complex_vectors_; }
  /// Column j as a complex vector, whichever storage is in use.
  Eigen::VectorXcd eigenvector(Eigen::Index j) const;
  /// Coordinate of the site each basis vector belongs to.
  const Eigen::VectorXd& position_weights() const { return positions_; }

  /// U^dagger x
  Eigen::VectorXcd to_eigenbasis(const Eigen::VectorXcd& x) const;
  /// U y
  Eigen::VectorXcd from_eigenbasis(const Eigen::VectorXcd& y) const;

  /// max |H - U diag(lambda) U^dagger|.
  double reconstruction_error(const HermitianOperator& h) const;
  /// max |U^dagger U - I|.
  double orthonormality_error() const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd real_vectors_;
  Eigen::MatrixXcd complex_vectors_;
  Eigen::VectorXd positions_;
  std::size_t n_sites_ = 0;
  int components_ = 1;
  std::string label_;
};

/// Full spectral decomposition (LAPACK syevd / heevd).
EvolutionPlan diagonalize(const HermitianOperator& h);

/// Eigenvalues only, ascending.
Eigen::VectorXd hermitian_eigenvalues(const HermitianOperator& h);

/// psi(t) = U exp(-i lambda t) U^dagger psi0.
SpinorState evolve_state(const EvolutionPlan& plan, const SpinorState& psi0, double t);

/// sum_n coord(n)^2 (|psi+_n|^2 + |psi-_n|^2), coord(n) = n - (n_sites - 1)/2.
double second_moment(const SpinorState& psi);
double second_moment(const SpinorState& psi, const EvolutionPlan& plan);

/// sum_n coord(n) (|psi+_n|^2 + |psi-_n|^2).
double mean_position(const SpinorState& psi);

/// Probability outside the central `central_fraction` of the sites.
double edge_weight(const SpinorState& psi, double central_fraction = 0.9);

/// <psi, H psi> (real part).
double expectation(const HermitianOperator& h, const SpinorState& psi);

/// Closed-form time average of the second moment for one initial state.
///
/// With c_j = <phi_j, psi0> and X the squared-position matrix in the
/// eigenbasis, M(t) = sum_{k,j} conj(c_k) c_j X_kj K(E_j - E_k, t) where
/// K(w, t) = (1/t) int_0^t exp(-i w s) ds. Construction costs one
/// dimension^3 product; each evaluation is dimension^2 / 2 kernel calls.
class TimeAveragedMoment {
 public:
  TimeAveragedMoment(const EvolutionPlan& plan, const SpinorState& psi0);

  /// M(t); t must be > 0.
  double operator()(double t) const;
  /// lim_{t -> 0+} M(t), the second moment of psi0.
  double initial() const { return initial_; }
  /// lim_{t -> inf} M(t) for a nondegenerate spectrum: the diagonal terms.
  double long_time_limit() const { return diagonal_sum_; }

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXd weights_re_;  // upper triangle of Re W
  Eigen::MatrixXd weights_im_;  // upper triangle of Im W; empty when real
  double diagonal_sum_ = 0.0;
  double initial_ = 0.0;
};

double time_averaged_moment(const EvolutionPlan& plan, const SpinorState& psi0, double t);

enum class InitialState { upper_delta, balanced };

std::string to_string(InitialState s);
InitialState initial_state_from_string(const std::string& s);

/// Launch state at the lattice centre.
SpinorState initial_state(std::size_t n_sites, InitialState kind);

struct MomentSeries {
  std::vector<double> times;
  std::vector<double> values;     ///< disorder mean of M(t)
  std::vector<double> std_error;  ///< standard error of the mean
  /// Largest edge weight seen at any grid time <= t, maximized over realizations.
  std::vector<double> edge_weight;
  /// per_realization[r][i] = M(times[i]) for stream first_stream + r.
  std::vector<std::vector<double>> per_realization;

  std::size_t n_sites = 0;
  double mass = 0.0;
  double light_speed = 1.0;
  DisorderSpec spec;
  std::uint64_t first_stream = 0;
  InitialState initial = InitialState::upper_delta;

  std::size_t size() const { return times.size(); }
  bool flagged(std::size_t i, double threshold = 1e-6) const {
    return edge_weight[i] >= threshold;
  }
};

struct MomentOptions {
  std::size_t n_realizations = 1;
  std::uint64_t first_stream = 0;
  InitialState initial = InitialState::upper_delta;
  unsigned threads = 1;
};

/// Disorder-averaged M(t) with one diagonalization per realization.
MomentSeries moment_series(const LatticeConfig& config, const DisorderSpec& spec,
                           std::span<const double> times, const MomentOptions& options);

/// Columns t,M_mean,M_stderr,edge_weight_max.
void write_moments_csv(std::ostream& os, const MomentSeries& series);

struct PositionVelocity {
  double position = 0.0;  ///< <n-hat>
  double velocity = 0.0;  ///< <cA>
};

PositionVelocity mean_position_and_velocity(const EvolutionPlan& plan, const SpinorState& psi0,
                                            double t, const HermitianOperator& velocity);

}  // namespace diraclab
