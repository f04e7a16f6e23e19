#include "diraclab/dynamics.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "diraclab/error.hpp"
#include "diraclab/parallel.hpp"

namespace diraclab {

namespace {

constexpr double kSeriesCutoff = 1e-4;

// Re and Im of (1/t) int_0^t exp(-i w s) ds at x = w t.
inline double kernel_re(double x) {
  if (std::abs(x) < kSeriesCutoff) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

inline double kernel_im(double x) {
  // -(1 - cos x) / x, written without cancellation.
  if (std::abs(x) < kSeriesCutoff) return -(0.5 * x - x * x * x / 24.0);
  const double s = std::sin(0.5 * x);
  return -2.0 * s * s / x;
}

std::string lapack_failure(const char* routine, lapack_int info, Eigen::Index n) {
  std::ostringstream msg;
  msg << routine << " failed with info=" << info << " on a " << n << "x" << n << " matrix";
  if (info > 0) msg << " (" << info << " eigenvalues failed to converge)";
  else msg << " (argument " << -info << " invalid)";
  return msg.str();
}

}  // namespace

// --- EvolutionPlan --------------------------------------------------------

EvolutionPlan::EvolutionPlan(Eigen::VectorXd eigenvalues, Eigen::MatrixXd vectors,
                             std::size_t n_sites, int components, std::string label)
    : eigenvalues_(std::move(eigenvalues)),
      real_vectors_(std::move(vectors)),
      positions_(diraclab::position_weights(n_sites, components)),
      n_sites_(n_sites),
      components_(components),
      label_(std::move(label)) {}

EvolutionPlan::EvolutionPlan(Eigen::VectorXd eigenvalues, Eigen::MatrixXcd vectors,
                             std::size_t n_sites, int components, std::string label)
    : eigenvalues_(std::move(eigenvalues)),
      complex_vectors_(std::move(vectors)),
      positions_(diraclab::position_weights(n_sites, components)),
      n_sites_(n_sites),
      components_(components),
      label_(std::move(label)) {}

Eigen::VectorXcd EvolutionPlan::eigenvector(Eigen::Index j) const {
  if (is_real()) return real_vectors_.col(j).cast<std::complex<double>>();
  return complex_vectors_.col(j);
}

Eigen::VectorXcd EvolutionPlan::to_eigenbasis(const Eigen::VectorXcd& x) const {
  if (x.size() != dimension()) throw InvalidInput("state/plan dimension mismatch");
  if (!is_real()) return complex_vectors_.adjoint() * x;
  Eigen::VectorXcd y(x.size());
  y.real() = real_vectors_.transpose() * x.real();
  y.imag() = real_vectors_.transpose() * x.imag();
  return y;
}

Eigen::VectorXcd EvolutionPlan::from_eigenbasis(const Eigen::VectorXcd& y) const {
  if (y.size() != dimension()) throw InvalidInput("state/plan dimension mismatch");
  if (!is_real()) return complex_vectors_ * y;
  Eigen::VectorXcd x(y.size());
  x.real() = real_vectors_ * y.real();
  x.imag() = real_vectors_ * y.imag();
  return x;
}

double EvolutionPlan::reconstruction_error(const HermitianOperator& h) const {
  if (h.dimension() != dimension()) throw InvalidInput("operator/plan dimension mismatch");
  if (is_real() && h.is_real()) {
    const Eigen::MatrixXd r =
        real_vectors_ * eigenvalues_.asDiagonal() * real_vectors_.transpose();
    return (r - h.real_part()).cwiseAbs().maxCoeff();
  }
  const Eigen::MatrixXcd u = is_real() ? real_vectors_.cast<std::complex<double>>().eval()
                                       : complex_vectors_;
  const Eigen::MatrixXcd r = u * eigenvalues_.cast<std::complex<double>>().asDiagonal() * u.adjoint();
  return (r - h.dense()).cwiseAbs().maxCoeff();
}

double EvolutionPlan::orthonormality_error() const {
  const auto n = dimension();
  if (is_real())
    return (real_vectors_.transpose() * real_vectors_ - Eigen::MatrixXd::Identity(n, n))
        .cwiseAbs()
        .maxCoeff();
  return (complex_vectors_.adjoint() * complex_vectors_ - Eigen::MatrixXcd::Identity(n, n))
      .cwiseAbs()
      .maxCoeff();
}

// --- eigensolvers ---------------------------------------------------------

// A few eigenpairs spread over the spectrum must satisfy |Hu - lambda u| <= tol.
// Some optimized BLAS builds return garbage eigenvectors on CPUs they misdetect
// rather than failing, so the result is checked instead of trusted.
template <class Matrix, class Dense>
void check_residuals(const Matrix& vectors, const Eigen::VectorXd& w, const Dense& h,
                     double scale, const char* routine) {
  const Eigen::Index n = w.size();
  const Eigen::Index samples = std::min<Eigen::Index>(n, 8);
  const double tol = 1e-8 * std::max(1.0, scale);
  for (Eigen::Index s = 0; s < samples; ++s) {
    const Eigen::Index j = samples == 1 ? 0 : s * (n - 1) / (samples - 1);
    const double residual = (h * vectors.col(j) - w(j) * vectors.col(j)).norm();
    if (!(residual <= tol)) {
      std::ostringstream msg;
      msg << routine << " returned an eigenpair with residual " << residual << " (dimension " << n
          << ", tolerance " << tol
          << "); the LAPACK/BLAS backend is miscomputing on this machine. With OpenBLAS, set "
             "OPENBLAS_CORETYPE (for example Haswell) and rerun";
      throw NumericalError(msg.str());
    }
  }
}

EvolutionPlan diagonalize(const HermitianOperator& h) {
  const Eigen::Index n = h.dimension();
  if (n == 0) throw InvalidInput("cannot diagonalize an empty operator");
  Eigen::VectorXd w(n);
  if (h.is_real()) {
    Eigen::MatrixXd a = h.real_part();
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                                           a.data(), static_cast<lapack_int>(n), w.data());
    if (info != 0) throw NumericalError(lapack_failure("dsyevd", info, n));
    check_residuals(a, w, h.real_part(), h.max_abs(), "dsyevd");
    return EvolutionPlan(std::move(w), std::move(a), h.n_sites(), h.components(), h.label());
  }
  Eigen::MatrixXcd a = h.dense();
  const lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
      reinterpret_cast<lapack_complex_double*>(a.data()), static_cast<lapack_int>(n), w.data());
  if (info != 0) throw NumericalError(lapack_failure("zheevd", info, n));
  check_residuals(a, w, h.dense(), h.max_abs(), "zheevd");
  return EvolutionPlan(std::move(w), std::move(a), h.n_sites(), h.components(), h.label());
}

Eigen::VectorXd hermitian_eigenvalues(const HermitianOperator& h) {
  const Eigen::Index n = h.dimension();
  if (n == 0) throw InvalidInput("cannot diagonalize an empty operator");
  Eigen::VectorXd w(n);
  lapack_int info = 0;
  if (h.is_real()) {
    Eigen::MatrixXd a = h.real_part();
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(n), a.data(),
                          static_cast<lapack_int>(n), w.data());
    if (info != 0) throw NumericalError(lapack_failure("dsyevd", info, n));
  } else {
    Eigen::MatrixXcd a = h.dense();
    info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(n),
                          reinterpret_cast<lapack_complex_double*>(a.data()),
                          static_cast<lapack_int>(n), w.data());
    if (info != 0) throw NumericalError(lapack_failure("zheevd", info, n));
  }
  return w;
}

// --- states ---------------------------------------------------------------

SpinorState evolve_state(const EvolutionPlan& plan, const SpinorState& psi0, double t) {
  if (psi0.dimension() != plan.dimension())
    throw InvalidInput("initial state dimension does not match the evolution plan");
  if (t == 0.0) return psi0;
  Eigen::VectorXcd coeffs = plan.to_eigenbasis(psi0.amplitudes());
  for (Eigen::Index j = 0; j < coeffs.size(); ++j)
    coeffs(j) *= std::polar(1.0, -plan.eigenvalues()(j) * t);
  return SpinorState(plan.from_eigenbasis(coeffs), psi0.n_sites(), psi0.components());
}

double second_moment(const SpinorState& psi) {
  const Eigen::VectorXd w = psi.site_weights();
  double sum = 0.0;
  const double shift = 0.5 * static_cast<double>(psi.n_sites() - 1);
  for (Eigen::Index n = 0; n < w.size(); ++n) {
    const double x = static_cast<double>(n) - shift;
    sum += x * x * w(n);
  }
  return sum;
}

double second_moment(const SpinorState& psi, const EvolutionPlan& plan) {
  if (psi.dimension() != plan.dimension()) throw InvalidInput("state/plan dimension mismatch");
  return second_moment(psi);
}

double mean_position(const SpinorState& psi) {
  const Eigen::VectorXd w = psi.site_weights();
  double sum = 0.0;
  const double shift = 0.5 * static_cast<double>(psi.n_sites() - 1);
  for (Eigen::Index n = 0; n < w.size(); ++n) sum += (static_cast<double>(n) - shift) * w(n);
  return sum;
}

double edge_weight(const SpinorState& psi, double central_fraction) {
  if (!(central_fraction > 0.0 && central_fraction <= 1.0))
    throw InvalidInput("central fraction must lie in (0, 1]");
  const Eigen::VectorXd w = psi.site_weights();
  const auto n = w.size();
  const auto margin = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(0.5 * (1.0 - central_fraction) * static_cast<double>(n))));
  if (2 * margin >= n) return w.sum();
  return w.head(margin).sum() + w.tail(margin).sum();
}

double expectation(const HermitianOperator& h, const SpinorState& psi) {
  return psi.amplitudes().dot(h.apply(psi.amplitudes())).real();
}

// --- time-averaged moment -------------------------------------------------

TimeAveragedMoment::TimeAveragedMoment(const EvolutionPlan& plan, const SpinorState& psi0)
    : energies_(plan.eigenvalues()) {
  if (psi0.dimension() != plan.dimension())
    throw InvalidInput("initial state dimension does not match the evolution plan");
  const Eigen::VectorXd& x = plan.position_weights();
  const Eigen::VectorXcd c = plan.to_eigenbasis(psi0.amplitudes());
  const Eigen::Index n = plan.dimension();

  const bool real_case = plan.is_real() && c.imag().cwiseAbs().maxCoeff() == 0.0;
  if (real_case) {
    // X = Y^T Y with Y = diag(x) U; only the upper triangle is formed.
    const Eigen::MatrixXd y = x.asDiagonal() * plan.real_vectors();
    weights_re_ = Eigen::MatrixXd::Zero(n, n);
    weights_re_.selfadjointView<Eigen::Upper>().rankUpdate(y.transpose());
    const Eigen::VectorXd cr = c.real();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k <= j; ++k) weights_re_(k, j) *= cr(k) * cr(j);
  } else {
    const Eigen::MatrixXcd u = plan.is_real()
                                   ? plan.real_vectors().cast<std::complex<double>>().eval()
                                   : plan.complex_vectors();
    const Eigen::MatrixXcd y = x.cast<std::complex<double>>().asDiagonal() * u;
    Eigen::MatrixXcd xm = Eigen::MatrixXcd::Zero(n, n);
    xm.selfadjointView<Eigen::Upper>().rankUpdate(y.adjoint());
    weights_re_ = Eigen::MatrixXd::Zero(n, n);
    weights_im_ = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k <= j; ++k) {
        const std::complex<double> wkj = std::conj(c(k)) * c(j) * xm(k, j);
        weights_re_(k, j) = wkj.real();
        weights_im_(k, j) = wkj.imag();
      }
  }
  diagonal_sum_ = weights_re_.diagonal().sum();
  initial_ = 2.0 * weights_re_.sum() - diagonal_sum_;
}

double TimeAveragedMoment::operator()(double t) const {
  if (!(t > 0.0)) throw InvalidInput("time-averaged moment needs t > 0");
  const Eigen::Index n = energies_.size();
  const bool has_imag = weights_im_.size() != 0;
  double off = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    const double ej = energies_(j);
    const double* wre = weights_re_.col(j).data();
    double col = 0.0;
    if (has_imag) {
      const double* wim = weights_im_.col(j).data();
      for (Eigen::Index k = 0; k < j; ++k) {
        const double arg = (ej - energies_(k)) * t;
        col += wre[k] * kernel_re(arg) - wim[k] * kernel_im(arg);
      }
    } else {
      for (Eigen::Index k = 0; k < j; ++k) col += wre[k] * kernel_re((ej - energies_(k)) * t);
    }
    off += col;
  }
  return diagonal_sum_ + 2.0 * off;
}

double time_averaged_moment(const EvolutionPlan& plan, const SpinorState& psi0, double t) {
  if (!(t > 0.0)) throw InvalidInput("time-averaged moment needs t > 0");
  return TimeAveragedMoment(plan, psi0)(t);
}

// --- ensembles ------------------------------------------------------------

std::string to_string(InitialState s) {
  return s == InitialState::upper_delta ? "upper_delta" : "balanced";
}

InitialState initial_state_from_string(const std::string& s) {
  if (s == "upper_delta" || s == "upper") return InitialState::upper_delta;
  if (s == "balanced") return InitialState::balanced;
  throw InvalidInput("unknown initial state '" + s + "' (upper_delta, balanced)");
}

SpinorState initial_state(std::size_t n_sites, InitialState kind) {
  const std::size_t centre = n_sites / 2;
  return kind == InitialState::upper_delta ? SpinorState::basis(n_sites, centre, Component::upper)
                                           : SpinorState::balanced(n_sites, centre);
}

MomentSeries moment_series(const LatticeConfig& config, const DisorderSpec& spec,
                           std::span<const double> times, const MomentOptions& options) {
  config.validate();
  spec.validate();
  if (times.empty()) throw InvalidInput("time grid is empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0)) throw InvalidInput("time grid must be positive");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw InvalidInput("time grid must be strictly increasing");
  }
  if (options.n_realizations == 0) throw InvalidInput("need at least one realization");

  const std::size_t nt = times.size();
  const std::size_t nr = options.n_realizations;
  MomentSeries out;
  out.times.assign(times.begin(), times.end());
  out.per_realization.assign(nr, std::vector<double>(nt, 0.0));
  std::vector<std::vector<double>> edges(nr, std::vector<double>(nt, 0.0));

  const SpinorState psi0 = initial_state(config.n_sites, options.initial);
  parallel_for(nr, options.threads, [&](std::size_t r) {
    const auto potential = sample_potential(spec, config.n_sites, options.first_stream + r);
    const EvolutionPlan plan = diagonalize(build_dirac(config, potential));
    const TimeAveragedMoment moment(plan, psi0);
    double running_edge = edge_weight(psi0);
    for (std::size_t i = 0; i < nt; ++i) {
      out.per_realization[r][i] = moment(times[i]);
      running_edge = std::max(running_edge, edge_weight(evolve_state(plan, psi0, times[i])));
      edges[r][i] = running_edge;
    }
  });

  out.values.assign(nt, 0.0);
  out.std_error.assign(nt, 0.0);
  out.edge_weight.assign(nt, 0.0);
  for (std::size_t i = 0; i < nt; ++i) {
    double sum = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      sum += out.per_realization[r][i];
      out.edge_weight[i] = std::max(out.edge_weight[i], edges[r][i]);
    }
    const double mean = sum / static_cast<double>(nr);
    out.values[i] = mean;
    if (nr > 1) {
      double ss = 0.0;
      for (std::size_t r = 0; r < nr; ++r) {
        const double d = out.per_realization[r][i] - mean;
        ss += d * d;
      }
      out.std_error[i] =
          std::sqrt(ss / static_cast<double>(nr - 1)) / std::sqrt(static_cast<double>(nr));
    }
  }
  out.n_sites = config.n_sites;
  out.mass = config.mass;
  out.light_speed = config.light_speed;
  out.spec = spec;
  out.first_stream = options.first_stream;
  out.initial = options.initial;
  return out;
}

void write_moments_csv(std::ostream& os, const MomentSeries& series) {
  const auto old_precision = os.precision(17);
  os << "t,M_mean,M_stderr,edge_weight_max\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    os << series.times[i] << ',' << series.values[i] << ',' << series.std_error[i] << ','
       << series.edge_weight[i] << '\n';
  os.precision(old_precision);
}

PositionVelocity mean_position_and_velocity(const EvolutionPlan& plan, const SpinorState& psi0,
                                            double t, const HermitianOperator& velocity) {
  if (velocity.dimension() != plan.dimension())
    throw InvalidInput("velocity operator dimension does not match the evolution plan");
  const SpinorState psi = evolve_state(plan, psi0, t);
  return {mean_position(psi), expectation(velocity, psi)};
}

}  // namespace diraclab
