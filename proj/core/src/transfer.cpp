#include "diraclab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>

#include "diraclab/error.hpp"
#include "diraclab/parallel.hpp"

namespace diraclab {

namespace {

// Frobenius norm 1e100.
constexpr double kRescaleSquaredNorm = 1e200;
constexpr double kCatalogueTolerance = 1e-9;

// Largest singular value of a 2x2 matrix, free of the cancellation in the
// eigenvalue route.
double operator_norm(const Eigen::Matrix2d& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  return 0.5 * (std::hypot(a + d, b - c) + std::hypot(a - d, b + c));
}

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kCatalogueTolerance * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TransferMatrix transfer_matrix(double energy, double potential, double mass, double c) {
  if (!(c > 0.0)) throw InvalidInput("light speed c must be > 0");
  const double rest = mass * c * c;
  const double shifted = energy - potential;
  TransferMatrix t;
  t.entries << 1.0 + (rest * rest - shifted * shifted) / (c * c), (rest + shifted) / c,
      (rest - shifted) / c, 1.0;
  return t;
}

double spectral_radius(const TransferMatrix& t) {
  const double tau = std::abs(t.trace());
  if (tau <= 2.0) return 1.0;
  return 0.5 * (tau + std::sqrt(tau * tau - 4.0));
}

namespace {

// A real basis in which every transfer matrix of a two-valued potential is
// diagonal or anti-diagonal. When it exists the pair {T(+v), T(-v)} leaves a
// pair of lines invariant, and products computed naively in floating point
// drift off that structure: round-off at relative size 1e-16 is amplified by
// the product norm and shows up as a spurious positive growth rate. Products
// taken in the adapted basis keep the structural zeros exactly.
struct AdaptedBasis {
  Eigen::Matrix2d to_standard;    // columns span the invariant lines
  Eigen::Matrix2d from_standard;
};

constexpr double kStructureTolerance = 1e-12;

// Zeroes the off-pattern entries of m if it is diagonal or anti-diagonal to
// tolerance; returns false otherwise.
bool snap_to_pattern(Eigen::Matrix2d& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  const double tol = kStructureTolerance * scale;
  if (std::abs(m(0, 1)) <= tol && std::abs(m(1, 0)) <= tol) {
    m(0, 1) = m(1, 0) = 0.0;
    return true;
  }
  if (std::abs(m(0, 0)) <= tol && std::abs(m(1, 1)) <= tol) {
    m(0, 0) = m(1, 1) = 0.0;
    return true;
  }
  return false;
}

std::optional<AdaptedBasis> shared_line_pair(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b,
                                             Eigen::Matrix2d& a_adapted,
                                             Eigen::Matrix2d& b_adapted) {
  for (const Eigen::Matrix2d& candidate : {a, b, Eigen::Matrix2d(a * b)}) {
    const double tau = candidate.trace();
    const double disc = tau * tau - 4.0 * candidate.determinant();
    if (!(disc > kStructureTolerance * tau * tau)) continue;  // needs two real eigenlines
    Eigen::EigenSolver<Eigen::Matrix2d> solver(candidate);
    AdaptedBasis basis{solver.eigenvectors().real(), Eigen::Matrix2d()};
    if (std::abs(basis.to_standard.determinant()) < 1e-8) continue;
    basis.from_standard = basis.to_standard.inverse();
    a_adapted = basis.from_standard * a * basis.to_standard;
    b_adapted = basis.from_standard * b * basis.to_standard;
    if (snap_to_pattern(a_adapted) && snap_to_pattern(b_adapted)) return basis;
  }
  return std::nullopt;
}

// Accumulates step * running with rescaling whenever the Frobenius norm
// leaves [1e-100, 1e100].
class RescaledProduct {
 public:
  void multiply(const Eigen::Matrix2d& step) {
    running_ = (step * running_).eval();
    const double norm2 = running_.squaredNorm();
    if (norm2 > kRescaleSquaredNorm || norm2 < 1.0 / kRescaleSquaredNorm) {
      const double norm = std::sqrt(norm2);
      log_scale_ += std::log(norm);
      running_ /= norm;
    }
  }
  const Eigen::Matrix2d& running() const { return running_; }
  double log_scale() const { return log_scale_; }

 private:
  Eigen::Matrix2d running_ = Eigen::Matrix2d::Identity();
  double log_scale_ = 0.0;
};

// Product of diagonal / anti-diagonal factors. Such a product is itself
// diagonal or anti-diagonal, so it is two signed numbers kept as log
// magnitudes; nothing can underflow or overflow.
class PatternedProduct {
 public:
  struct Factor {
    bool anti = false;
    double log_first = 0.0, log_second = 0.0;  // (a, d) or (b, c)
    bool neg_first = false, neg_second = false;
  };

  static Factor factor(const Eigen::Matrix2d& m) {
    Factor f;
    f.anti = m(0, 0) == 0.0;
    const double first = f.anti ? m(0, 1) : m(0, 0);
    const double second = f.anti ? m(1, 0) : m(1, 1);
    f.log_first = std::log(std::abs(first));
    f.log_second = std::log(std::abs(second));
    f.neg_first = first < 0.0;
    f.neg_second = second < 0.0;
    return f;
  }

  void multiply(const Factor& f) {
    if (!f.anti) {
      row0_.log += f.log_first;
      row0_.neg ^= f.neg_first;
      row1_.log += f.log_second;
      row1_.neg ^= f.neg_second;
      return;
    }
    const Entry r0 = row0_, r1 = row1_;
    row0_ = {r1.log + f.log_first, r1.neg != f.neg_first};
    row1_ = {r0.log + f.log_second, r0.neg != f.neg_second};
    anti_ = !anti_;
  }

  double log_scale() const { return std::max(row0_.log, row1_.log); }

  /// The product divided by exp(log_scale()).
  Eigen::Matrix2d scaled() const {
    const double top = log_scale();
    const double e0 = (row0_.neg ? -1.0 : 1.0) * std::exp(row0_.log - top);
    const double e1 = (row1_.neg ? -1.0 : 1.0) * std::exp(row1_.log - top);
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    if (anti_) {
      m(0, 1) = e0;
      m(1, 0) = e1;
    } else {
      m(0, 0) = e0;
      m(1, 1) = e1;
    }
    return m;
  }

 private:
  struct Entry {
    double log = 0.0;
    bool neg = false;
  };
  Entry row0_, row1_;
  bool anti_ = false;
};

TransferProduct finish(double log_scale, const Eigen::Matrix2d& standard) {
  TransferProduct out;
  const double norm = operator_norm(standard);
  out.log_norm_sum = log_scale + std::log(norm);
  out.frame = standard / norm;
  return out;
}

}  // namespace

TransferProduct propagate_transfer(double energy, std::span<const double> potential, double mass,
                                   double c) {
  if (potential.empty()) throw InvalidInput("potential must be nonempty");

  std::vector<double> levels;
  for (double value : potential) {
    if (std::find(levels.begin(), levels.end(), value) == levels.end()) levels.push_back(value);
    if (levels.size() > 2) break;
  }

  if (levels.size() <= 2) {
    // Bernoulli and dimer samples: two matrices, cached.
    const Eigen::Matrix2d first = transfer_matrix(energy, levels.front(), mass, c).entries;
    const Eigen::Matrix2d second = transfer_matrix(energy, levels.back(), mass, c).entries;
    Eigen::Matrix2d first_adapted, second_adapted;
    if (const auto basis = shared_line_pair(first, second, first_adapted, second_adapted)) {
      const auto first_factor = PatternedProduct::factor(first_adapted);
      const auto second_factor = PatternedProduct::factor(second_adapted);
      PatternedProduct product;
      for (double value : potential)
        product.multiply(value == levels.front() ? first_factor : second_factor);
      return finish(product.log_scale(),
                    basis->to_standard * product.scaled() * basis->from_standard);
    }
    RescaledProduct product;
    for (double value : potential) product.multiply(value == levels.front() ? first : second);
    return finish(product.log_scale(), product.running());
  }
  RescaledProduct product;
  for (double value : potential) product.multiply(transfer_matrix(energy, value, mass, c).entries);
  return finish(product.log_scale(), product.running());
}

TransferProduct propagate_transfer(double energy, const PotentialRealization& potential,
                                   const LatticeConfig& config) {
  return propagate_transfer(energy, std::span<const double>(potential.values), config.mass,
                            config.light_speed);
}

Eigen::VectorXd transfer_solution(double energy, std::span<const double> potential, double mass,
                                  double c, const Eigen::Vector2d& initial) {
  const auto n = static_cast<Eigen::Index>(potential.size());
  if (n == 0) throw InvalidInput("potential must be nonempty");
  Eigen::VectorXd psi(2 * n);
  Eigen::Vector2d carry = initial;  // (psi+_k, psi-_{k-1})
  for (Eigen::Index k = 0; k < n; ++k) {
    psi(k) = carry(0);
    carry = transfer_matrix(energy, potential[static_cast<std::size_t>(k)], mass, c).entries * carry;
    psi(n + k) = carry(1);
  }
  return psi;
}

LyapunovEstimate lyapunov_exponent(double energy, const DisorderSpec& spec, double mass, double c,
                                   const LyapunovOptions& options) {
  spec.validate();
  if (!(c > 0.0)) throw InvalidInput("light speed c must be > 0");
  if (options.n_steps < 10'000) throw InvalidInput("lyapunov_exponent needs n_steps >= 1e4");
  if (options.n_realizations == 0) throw InvalidInput("need at least one realization");

  std::vector<double> rates(options.n_realizations);
  parallel_for(options.n_realizations, options.threads, [&](std::size_t r) {
    const auto potential = sample_potential(spec, options.n_steps, options.first_stream + r);
    rates[r] = propagate_transfer(energy, std::span<const double>(potential.values), mass, c)
                   .log_norm_sum /
               static_cast<double>(options.n_steps);
  });

  LyapunovEstimate est;
  est.energy = energy;
  est.n_steps = options.n_steps;
  est.n_realizations = options.n_realizations;
  double sum = 0.0;
  for (double r : rates) sum += r;
  est.gamma = std::max(0.0, sum / static_cast<double>(rates.size()));
  if (rates.size() > 1) {
    double ss = 0.0;
    for (double r : rates) ss += (r - est.gamma) * (r - est.gamma);
    est.std_error = std::sqrt(ss / static_cast<double>(rates.size() - 1)) /
                    std::sqrt(static_cast<double>(rates.size()));
  }
  if (est.resolved_from_zero()) est.loc_length = 1.0 / est.gamma;
  return est;
}

std::string to_string(CriticalRegime regime) {
  switch (regime) {
    case CriticalRegime::massless: return "massless";
    case CriticalRegime::massive_v_eq_special: return "massive_v_eq_special";
    case CriticalRegime::massive_v_eq_c_over_sqrt2: return "massive_v_eq_c_over_sqrt2";
    case CriticalRegime::none: return "none";
  }
  return "unknown";
}

CriticalEnergySet critical_energies(double mass, double c, double v) {
  if (!(c > 0.0)) throw InvalidInput("light speed c must be > 0");
  if (!(v > 0.0)) throw InvalidInput("disorder strength v must be > 0");
  if (!(mass >= 0.0)) throw InvalidInput("mass must be >= 0");

  CriticalEnergySet out;
  const double c_over_sqrt2 = c / std::numbers::sqrt2;
  if (mass == 0.0) {
    if (v <= c * (1.0 + kCatalogueTolerance) && !nearly_equal(v, c_over_sqrt2)) {
      out.regime = CriticalRegime::massless;
      out.energies = {-v, v};
    }
    return out;
  }
  const double special = c * std::sqrt(2.0 + mass * mass * c * c);
  if (nearly_equal(v, special)) {
    out.regime = CriticalRegime::massive_v_eq_special;
    out.energies = {0.0};
  } else if (nearly_equal(v, c_over_sqrt2)) {
    out.regime = CriticalRegime::massive_v_eq_c_over_sqrt2;
    out.energies = {-c_over_sqrt2 - special, c_over_sqrt2 - special, -c_over_sqrt2 + special,
                    c_over_sqrt2 + special};
    std::sort(out.energies.begin(), out.energies.end());
  }
  return out;
}

std::vector<double> sweep_energies(const EnergySweepOptions& sweep,
                                   const CriticalEnergySet& critical) {
  if (sweep.points == 0) throw InvalidInput("energy sweep needs at least one point");
  if (sweep.points > 1 && !(sweep.e_max > sweep.e_min))
    throw InvalidInput("energy sweep needs e_max > e_min");
  std::vector<double> energies;
  const double spacing =
      sweep.points > 1 ? (sweep.e_max - sweep.e_min) / static_cast<double>(sweep.points - 1) : 0.0;
  for (std::size_t i = 0; i < sweep.points; ++i)
    energies.push_back(sweep.e_min + spacing * static_cast<double>(i));
  for (double ec : critical.energies) {
    if (ec < sweep.e_min || ec > sweep.e_max) continue;
    energies.push_back(ec);
    double delta = spacing;
    for (std::size_t k = 0; k < sweep.refine_levels && delta > 0.0; ++k) {
      delta *= 0.5;
      for (double e : {ec - delta, ec + delta})
        if (e >= sweep.e_min && e <= sweep.e_max) energies.push_back(e);
    }
  }
  std::sort(energies.begin(), energies.end());
  energies.erase(std::unique(energies.begin(), energies.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 energies.end());
  return energies;
}

std::vector<LyapunovEstimate> lyapunov_sweep(const DisorderSpec& spec, double mass, double c,
                                             const EnergySweepOptions& sweep,
                                             const LyapunovOptions& options) {
  const auto critical = spec.kind == DisorderKind::constant_zero
                            ? CriticalEnergySet{}
                            : critical_energies(mass, c, spec.v);
  const auto energies = sweep_energies(sweep, critical);
  std::vector<LyapunovEstimate> rows;
  rows.reserve(energies.size());
  for (double e : energies) rows.push_back(lyapunov_exponent(e, spec, mass, c, options));
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<LyapunovEstimate>& rows) {
  const auto old_precision = os.precision(17);
  os << "energy,gamma,std_error,loc_length,n_steps,n_realizations\n";
  for (const auto& r : rows) {
    os << r.energy << ',' << r.gamma << ',' << r.std_error << ',';
    if (std::isinf(r.loc_length)) os << "inf";
    else os << r.loc_length;
    os << ',' << r.n_steps << ',' << r.n_realizations << '\n';
  }
  os.precision(old_precision);
}

}  // namespace diraclab
