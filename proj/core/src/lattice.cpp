#include "diraclab/lattice.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "diraclab/disorder.hpp"

namespace diraclab {

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw InvalidInput("unknown boundary '" + s + "' (open, periodic)");
}

void LatticeConfig::validate() const {
  if (n_sites < 4) throw InvalidInput("n_sites must be >= 4");
  if (!(light_speed > 0.0) || !std::isfinite(light_speed))
    throw InvalidInput("light speed c must be > 0");
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw InvalidInput("mass must be >= 0");
}

Eigen::MatrixXd difference_matrix(std::size_t n_sites, Boundary boundary) {
  if (n_sites < 2) throw InvalidInput("difference operator needs at least 2 sites");
  const auto n = static_cast<Eigen::Index>(n_sites);
  Eigen::MatrixXd d = -Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) d(i, i + 1) = 1.0;
  if (boundary == Boundary::periodic) d(n - 1, 0) += 1.0;
  return d;
}

Eigen::MatrixXd shift_matrix(std::size_t n_sites, Boundary boundary) {
  if (n_sites < 2) throw InvalidInput("shift operator needs at least 2 sites");
  const auto n = static_cast<Eigen::Index>(n_sites);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) s(i, i + 1) = 1.0;
  if (boundary == Boundary::periodic) s(n - 1, 0) = 1.0;
  return s;
}

Eigen::MatrixXd laplacian_matrix(std::size_t n_sites, Boundary boundary) {
  const auto n = static_cast<Eigen::Index>(n_sites);
  Eigen::MatrixXd lap = -2.0 * Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    lap(i, i + 1) += 1.0;
    lap(i + 1, i) += 1.0;
  }
  if (boundary == Boundary::periodic) {
    lap(n - 1, 0) += 1.0;
    lap(0, n - 1) += 1.0;
  }
  return lap;
}

// --- HermitianOperator ----------------------------------------------------

HermitianOperator::HermitianOperator(Eigen::MatrixXd real_part, Eigen::MatrixXd imag_part,
                                     std::size_t n_sites, int components, std::string label)
    : real_(std::move(real_part)),
      imag_(std::move(imag_part)),
      n_sites_(n_sites),
      components_(components),
      label_(std::move(label)) {
  if (real_.rows() != real_.cols())
    throw InvalidInput("operator matrix must be square");
  if (imag_.size() != 0 && (imag_.rows() != real_.rows() || imag_.cols() != real_.cols()))
    throw InvalidInput("real and imaginary blocks differ in shape");
  if (components_ != 1 && components_ != 2) throw InvalidInput("components must be 1 or 2");
  if (static_cast<std::size_t>(real_.rows()) != n_sites_ * static_cast<std::size_t>(components_))
    throw InvalidInput("operator dimension does not match n_sites * components");
  if (imag_.size() != 0 && imag_.cwiseAbs().maxCoeff() == 0.0) imag_.resize(0, 0);
  if (hermiticity_defect() > 1e-14 * std::max(1.0, max_abs()))
    throw InvalidInput("operator '" + label_ + "' is not Hermitian");
}

HermitianOperator HermitianOperator::real_symmetric(Eigen::MatrixXd m, std::size_t n_sites,
                                                    int components, std::string label) {
  return HermitianOperator(std::move(m), Eigen::MatrixXd(), n_sites, components, std::move(label));
}

Eigen::MatrixXcd HermitianOperator::dense() const {
  Eigen::MatrixXcd out = real_.cast<std::complex<double>>();
  if (!is_real()) out.imag() = imag_;
  return out;
}

Eigen::VectorXcd HermitianOperator::apply(const Eigen::VectorXcd& x) const {
  if (x.size() != dimension()) throw InvalidInput("operator/state dimension mismatch");
  Eigen::VectorXcd out(x.size());
  out.real() = real_ * x.real();
  out.imag() = real_ * x.imag();
  if (!is_real()) {
    out.real() -= imag_ * x.imag();
    out.imag() += imag_ * x.real();
  }
  return out;
}

double HermitianOperator::hermiticity_defect() const {
  if (real_.size() == 0) return 0.0;
  double defect = (real_ - real_.transpose()).cwiseAbs().maxCoeff();
  if (!is_real()) defect = std::max(defect, (imag_ + imag_.transpose()).cwiseAbs().maxCoeff());
  return defect;
}

double HermitianOperator::max_abs() const {
  if (real_.size() == 0) return 0.0;
  double m = real_.cwiseAbs().maxCoeff();
  if (!is_real()) m = std::max(m, imag_.cwiseAbs().maxCoeff());
  return m;
}

// --- builders -------------------------------------------------------------

namespace {

void require_potential_length(const LatticeConfig& config, std::span<const double> potential) {
  if (potential.size() != config.n_sites) {
    std::ostringstream msg;
    msg << "potential length " << potential.size() << " does not match n_sites "
        << config.n_sites;
    throw InvalidInput(msg.str());
  }
}

std::string describe(const char* model, const LatticeConfig& config) {
  std::ostringstream os;
  os << model << "(n=" << config.n_sites << ", " << to_string(config.boundary)
     << ", m=" << config.mass << ", c=" << config.light_speed << ")";
  return os.str();
}

}  // namespace

HermitianOperator build_dirac(const LatticeConfig& config, std::span<const double> potential) {
  config.validate();
  require_potential_length(config, potential);

  const auto n = static_cast<Eigen::Index>(config.n_sites);
  const double c = config.light_speed;
  const double rest = config.mass * c * c;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = rest + potential[i];
    h(n + i, n + i) = -rest + potential[i];
  }
  const Eigen::MatrixXd cd = c * difference_matrix(config.n_sites, config.boundary);
  h.block(n, 0, n, n) = cd;
  h.block(0, n, n, n) = cd.transpose();
  return HermitianOperator::real_symmetric(std::move(h), config.n_sites, 2,
                                           describe("dirac", config));
}

HermitianOperator build_dirac(const LatticeConfig& config, const PotentialRealization& potential) {
  return build_dirac(config, std::span<const double>(potential.values));
}

HermitianOperator build_schrodinger(const LatticeConfig& config,
                                    std::span<const double> potential) {
  config.validate();
  if (!(config.mass > 0.0)) throw InvalidInput("Schrodinger operator needs mass > 0");
  require_potential_length(config, potential);

  Eigen::MatrixXd h = -laplacian_matrix(config.n_sites, config.boundary) / (2.0 * config.mass);
  for (std::size_t i = 0; i < config.n_sites; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    h(k, k) += potential[i];
  }
  return HermitianOperator::real_symmetric(std::move(h), config.n_sites, 1,
                                           describe("schrodinger", config));
}

HermitianOperator build_schrodinger(const LatticeConfig& config,
                                    const PotentialRealization& potential) {
  return build_schrodinger(config, std::span<const double>(potential.values));
}

HermitianOperator velocity_operator(const LatticeConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.n_sites);
  const double c = config.light_speed;
  const Eigen::MatrixXd s = shift_matrix(config.n_sites, config.boundary);

  // cA = i c K with K = [[0, -S^T], [S, 0]] real antisymmetric.
  Eigen::MatrixXd imag = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  imag.block(0, n, n, n) = -c * s.transpose();
  imag.block(n, 0, n, n) = c * s;
  return HermitianOperator(Eigen::MatrixXd::Zero(2 * n, 2 * n), std::move(imag),
                           config.n_sites, 2, describe("velocity", config));
}

Eigen::VectorXd position_weights(std::size_t n_sites, int components) {
  if (components != 1 && components != 2) throw InvalidInput("components must be 1 or 2");
  const auto n = static_cast<Eigen::Index>(n_sites);
  Eigen::VectorXd x(n * components);
  const double shift = 0.5 * static_cast<double>(n_sites - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = static_cast<double>(i) - shift;
    if (components == 2) x(n + i) = x(i);
  }
  return x;
}

// --- SpinorState ----------------------------------------------------------

SpinorState::SpinorState(std::size_t n_sites, int components)
    : amplitudes_(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_sites) * components)),
      n_sites_(n_sites),
      components_(components) {
  if (components != 1 && components != 2) throw InvalidInput("components must be 1 or 2");
}

SpinorState::SpinorState(Eigen::VectorXcd amplitudes, std::size_t n_sites, int components)
    : amplitudes_(std::move(amplitudes)), n_sites_(n_sites), components_(components) {
  if (components != 1 && components != 2) throw InvalidInput("components must be 1 or 2");
  if (static_cast<std::size_t>(amplitudes_.size()) != n_sites * static_cast<std::size_t>(components))
    throw InvalidInput("amplitude count does not match n_sites * components");
}

SpinorState SpinorState::basis(std::size_t n_sites, std::size_t site, Component which) {
  if (site >= n_sites) throw InvalidInput("basis site out of range");
  SpinorState s(n_sites, 2);
  s.amplitudes_(static_cast<Eigen::Index>(which == Component::upper ? site : n_sites + site)) = 1.0;
  return s;
}

SpinorState SpinorState::scalar_basis(std::size_t n_sites, std::size_t site) {
  if (site >= n_sites) throw InvalidInput("basis site out of range");
  SpinorState s(n_sites, 1);
  s.amplitudes_(static_cast<Eigen::Index>(site)) = 1.0;
  return s;
}

SpinorState SpinorState::balanced(std::size_t n_sites, std::size_t site) {
  if (site >= n_sites) throw InvalidInput("basis site out of range");
  SpinorState s(n_sites, 2);
  s.amplitudes_(static_cast<Eigen::Index>(site)) = std::numbers::sqrt2 / 2.0;
  s.amplitudes_(static_cast<Eigen::Index>(n_sites + site)) = std::numbers::sqrt2 / 2.0;
  return s;
}

SpinorState SpinorState::gaussian(std::size_t n_sites, int components, double center,
                                  double width, double momentum, Component which) {
  if (!(width > 0.0)) throw InvalidInput("packet width must be > 0");
  SpinorState s(n_sites, components);
  const std::size_t offset = (components == 2 && which == Component::lower) ? n_sites : 0;
  for (std::size_t n = 0; n < n_sites; ++n) {
    const double dx = static_cast<double>(n) - center;
    const double envelope = std::exp(-dx * dx / (4.0 * width * width));
    s.amplitudes_(static_cast<Eigen::Index>(offset + n)) =
        envelope * std::polar(1.0, momentum * dx);
  }
  s.normalize();
  return s;
}

std::complex<double> SpinorState::lower(std::size_t site) const {
  if (components_ != 2) throw InvalidInput("scalar state has no lower component");
  return amplitudes_(static_cast<Eigen::Index>(n_sites_ + site));
}

Eigen::VectorXcd SpinorState::lower_component() const {
  if (components_ != 2) throw InvalidInput("scalar state has no lower component");
  return amplitudes_.tail(static_cast<Eigen::Index>(n_sites_));
}

Eigen::VectorXd SpinorState::site_weights() const {
  const auto n = static_cast<Eigen::Index>(n_sites_);
  Eigen::VectorXd w = amplitudes_.head(n).cwiseAbs2();
  if (components_ == 2) w += amplitudes_.tail(n).cwiseAbs2();
  return w;
}

void SpinorState::normalize() {
  const double nrm = norm();
  if (!(nrm > 0.0)) throw InvalidInput("cannot normalize the zero state");
  amplitudes_ /= nrm;
}

}  // namespace diraclab
