#pragma once

// Finite-lattice Dirac and Schrodinger Hamiltonians on a 1D chain.
//
// Basis ordering for two-component (Dirac) operators is block-wise:
// index n is the upper component psi+_n and index n_sites + n is the lower
// component psi-_n, so H_D = [[m c^2 + V, c d*], [c d, -m c^2 + V]] is stored
// exactly as written. Scalar (Schrodinger) operators use index n for site n.

#include <complex>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "diraclab/error.hpp"

namespace diraclab {

struct PotentialRealization;

enum class Boundary { open, periodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

struct LatticeConfig {
  std::size_t n_sites = 0;
  Boundary boundary = Boundary::open;
  double mass = 0.0;
  double light_speed = 1.0;

  /// Throws InvalidInput unless n_sites >= 4, c > 0 and m >= 0.
  void validate() const;

  /// Site whose coordinate is closest to zero (the launch site).
  std::size_t center_site() const { return n_sites / 2; }

  /// Position coordinate n - (n_sites - 1) / 2.
  double coordinate(std::size_t site) const {
    return static_cast<double>(site) - 0.5 * static_cast<double>(n_sites - 1);
  }
};

// --- difference operators -------------------------------------------------

namespace detail {
inline void require_difference_length(Eigen::Index n) {
  if (n < 2) throw InvalidInput("difference operator needs at least 2 sites");
}
}  // namespace detail

/// (d psi)_n = psi_{n+1} - psi_n. Open chains read psi_{n_sites} as 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_d(
    const Eigen::MatrixBase<Derived>& psi, Boundary boundary) {
  const Eigen::Index n = psi.size();
  detail::require_difference_length(n);
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) out(i) = psi(i + 1) - psi(i);
  const auto wrap = boundary == Boundary::periodic ? psi(0) : typename Derived::Scalar(0);
  out(n - 1) = wrap - psi(n - 1);
  return out;
}

/// (d* psi)_n = psi_{n-1} - psi_n, the exact adjoint of apply_d.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_d_star(
    const Eigen::MatrixBase<Derived>& psi, Boundary boundary) {
  const Eigen::Index n = psi.size();
  detail::require_difference_length(n);
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(n);
  const auto wrap = boundary == Boundary::periodic ? psi(n - 1) : typename Derived::Scalar(0);
  out(0) = wrap - psi(0);
  for (Eigen::Index i = 1; i < n; ++i) out(i) = psi(i - 1) - psi(i);
  return out;
}

/// Matrix of d on n sites.
Eigen::MatrixXd difference_matrix(std::size_t n_sites, Boundary boundary);

/// Matrix of the forward shift (d + 1), psi_{n+1} at row n.
Eigen::MatrixXd shift_matrix(std::size_t n_sites, Boundary boundary);

/// Matrix of the lattice Laplacian (Delta psi)_n = psi_{n+1} + psi_{n-1} - 2 psi_n.
Eigen::MatrixXd laplacian_matrix(std::size_t n_sites, Boundary boundary);

// --- operators ------------------------------------------------------------

/// A Hermitian matrix stored as real part plus (optional) imaginary part.
///
/// Operators built from the real convention of the Dirac model are real
/// symmetric and carry no imaginary block; the velocity operator is purely
/// imaginary. The constructor rejects input that is not Hermitian.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  /// components = 2 for spinor operators, 1 for scalar ones.
  HermitianOperator(Eigen::MatrixXd real_part, Eigen::MatrixXd imag_part,
                    std::size_t n_sites, int components, std::string label);

  static HermitianOperator real_symmetric(Eigen::MatrixXd m, std::size_t n_sites,
                                          int components, std::string label);

  Eigen::Index dimension() const { return real_.rows(); }
  std::size_t n_sites() const { return n_sites_; }
  int components() const { return components_; }
  const std::string& label() const { return label_; }

  bool is_real() const { return imag_.size() == 0; }
  const Eigen::MatrixXd& real_part() const { return real_; }
  /// Empty when is_real().
  const Eigen::MatrixXd& imag_part() const { return imag_; }

  Eigen::MatrixXcd dense() const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

  /// max |H_ij - conj(H_ji)|.
  double hermiticity_defect() const;
  /// Largest absolute entry.
  double max_abs() const;

 private:
  Eigen::MatrixXd real_;
  Eigen::MatrixXd imag_;
  std::size_t n_sites_ = 0;
  int components_ = 1;
  std::string label_;
};

HermitianOperator build_dirac(const LatticeConfig& config, std::span<const double> potential);
HermitianOperator build_dirac(const LatticeConfig& config, const PotentialRealization& potential);

/// (H_S psi)_n = (1/2m)(-psi_{n+1} - psi_{n-1} + 2 psi_n) + V_n psi_n. Needs m > 0.
HermitianOperator build_schrodinger(const LatticeConfig& config, std::span<const double> potential);
HermitianOperator build_schrodinger(const LatticeConfig& config,
                                    const PotentialRealization& potential);

/// cA with A = i [[0, -d* - 1], [d + 1, 0]].
///
/// On a periodic ring A^2 = I and spec(cA) = {+c, -c}. On an open chain the
/// identity fails at the two edge rows, where the truncated shift loses a
/// neighbour.
HermitianOperator velocity_operator(const LatticeConfig& config);

/// Position operator n-hat as a diagonal of coordinates, one entry per basis vector.
Eigen::VectorXd position_weights(std::size_t n_sites, int components);

// --- states ---------------------------------------------------------------

enum class Component { upper, lower };

/// Lattice wavefunction with one (scalar) or two (spinor) components per site.
///
/// Amplitudes use the same block ordering as HermitianOperator.
class SpinorState {
 public:
  SpinorState() = default;
  SpinorState(std::size_t n_sites, int components);
  SpinorState(Eigen::VectorXcd amplitudes, std::size_t n_sites, int components);

  /// delta_site^+ or delta_site^- on a spinor lattice.
  static SpinorState basis(std::size_t n_sites, std::size_t site, Component which);
  /// delta_site on a scalar lattice.
  static SpinorState scalar_basis(std::size_t n_sites, std::size_t site);
  /// (delta^+ + delta^-) / sqrt(2) at one site.
  static SpinorState balanced(std::size_t n_sites, std::size_t site);
  /// Normalized Gaussian exp(-(n-n0)^2 / (4 width^2) + i k0 n) in one component.
  static SpinorState gaussian(std::size_t n_sites, int components, double center, double width,
                              double momentum, Component which = Component::upper);

  std::size_t n_sites() const { return n_sites_; }
  int components() const { return components_; }
  Eigen::Index dimension() const { return amplitudes_.size(); }

  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Eigen::VectorXcd& amplitudes() { return amplitudes_; }

  std::complex<double> upper(std::size_t site) const { return amplitudes_(site); }
  std::complex<double> lower(std::size_t site) const;
  /// Upper component for spinors, the wavefunction itself for scalar states.
  Eigen::VectorXcd upper_component() const { return amplitudes_.head(n_sites_); }
  Eigen::VectorXcd lower_component() const;

  /// |psi+_n|^2 + |psi-_n|^2 for every site.
  Eigen::VectorXd site_weights() const;
  double squared_norm() const { return amplitudes_.squaredNorm(); }
  double norm() const { return amplitudes_.norm(); }
  void normalize();

 private:
  Eigen::VectorXcd amplitudes_;
  std::size_t n_sites_ = 0;
  int components_ = 2;
};

}  // namespace diraclab
