#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "diraclab/disorder.hpp"
#include "diraclab/dynamics.hpp"
#include "diraclab/error.hpp"
#include "diraclab/lattice.hpp"
#include "diraclab/transfer.hpp"

using namespace diraclab;

TEST_CASE("massless matrices at E = v") {
  for (double v : {0.25, 0.5, 1.0}) {
    const Eigen::Matrix2d same = transfer_matrix(v, v, 0.0, 1.0).entries;
    CHECK(same == Eigen::Matrix2d::Identity());
    const Eigen::Matrix2d flip = transfer_matrix(v, -v, 0.0, 1.0).entries;
    const double r = 2.0 * v;
    CHECK(flip(0, 0) == 1.0 - r * r);
    CHECK(flip(0, 1) == r);
    CHECK(flip(1, 0) == -r);
    CHECK(flip(1, 1) == 1.0);
    // The pair commutes because one factor is the identity.
    CHECK((flip * same - same * flip).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("determinant is one for random parameters") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> e(-5.0, 5.0), m(0.0, 3.0), c(0.2, 4.0), v(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 10'000; ++i)
    worst = std::max(worst, std::abs(transfer_matrix(e(rng), v(rng), m(rng), c(rng)).determinant() - 1.0));
  CHECK(worst <= 1e-12);
}

TEST_CASE("spectral radius") {
  TransferMatrix identity;
  CHECK(spectral_radius(identity) == 1.0);
  for (double v : {0.1, 0.5, 1.0 / std::numbers::sqrt2, 1.0})
    CHECK(spectral_radius(transfer_matrix(v, -v, 0.0, 1.0)) == 1.0);
  const TransferMatrix hyper = transfer_matrix(1.5, -1.5, 0.0, 1.0);
  CHECK(hyper.trace() == doctest::Approx(-7.0));
  CHECK(spectral_radius(hyper) == doctest::Approx((7.0 + std::sqrt(45.0)) / 2.0).epsilon(1e-14));
  CHECK(spectral_radius(transfer_matrix(1.1, -1.1, 0.0, 1.0)) > 1.0);
}

TEST_CASE("products of identity factors have zero log norm") {
  const std::vector<double> plus(5000, 0.5);
  const TransferProduct t = propagate_transfer(0.5, plus, 0.0, 1.0);
  CHECK(t.log_norm_sum == 0.0);
}

TEST_CASE("elliptic powers stay bounded") {
  double previous = 0.0;
  for (std::size_t n : {1000u, 10'000u, 100'000u}) {
    const std::vector<double> minus(n, -0.5);
    const double log_norm = propagate_transfer(0.5, minus, 0.0, 1.0).log_norm_sum;
    CHECK(log_norm < 3.0);
    CHECK(log_norm / static_cast<double>(n) < 1e-3);
    previous = log_norm;
  }
  CHECK(previous >= 0.0);
}

TEST_CASE("hyperbolic powers grow at the spectral radius") {
  const std::vector<double> minus(20'000, -1.5);
  const double rate = propagate_transfer(1.5, minus, 0.0, 1.0).log_norm_sum / 20'000.0;
  CHECK(rate == doctest::Approx(std::log((7.0 + std::sqrt(45.0)) / 2.0)).epsilon(1e-3));
}

TEST_CASE("long products do not overflow") {
  const DisorderSpec spec{2.0, 0.5, DisorderKind::bernoulli, 4};
  const auto potential = sample_potential(spec, 200'000, 0);
  const TransferProduct t = propagate_transfer(0.3, std::span<const double>(potential.values), 0.5, 1.0);
  CHECK(std::isfinite(t.log_norm_sum));
  CHECK(t.log_norm_sum > 1000.0);
  CHECK(t.frame.allFinite());
}

TEST_CASE("recursion solves the eigen-equation at interior sites") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> e(-2.0, 2.0), m(0.0, 1.5), c(0.5, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 24;
    const double energy = e(rng), mass = m(rng), speed = c(rng);
    const auto potential =
        sample_potential({0.7, 0.5, DisorderKind::bernoulli, 3}, n, static_cast<std::uint64_t>(trial));
    const Eigen::VectorXd psi = transfer_solution(energy, std::span<const double>(potential.values),
                                                  mass, speed, Eigen::Vector2d(1.0, 0.3));
    const HermitianOperator h = build_dirac({n, Boundary::open, mass, speed}, potential);
    const Eigen::VectorXd residual = h.real_part() * psi - energy * psi;
    const double scale = std::max(1.0, psi.cwiseAbs().maxCoeff());
    for (std::size_t k = 1; k + 1 < n; ++k) {
      CHECK(std::abs(residual(static_cast<Eigen::Index>(k))) <= 1e-10 * scale);
      CHECK(std::abs(residual(static_cast<Eigen::Index>(n + k))) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("critical energy catalogue") {
  const auto massless = critical_energies(0.0, 1.0, 0.5);
  CHECK(massless.regime == CriticalRegime::massless);
  REQUIRE(massless.energies.size() == 2);
  CHECK(massless.energies[0] == -0.5);
  CHECK(massless.energies[1] == 0.5);

  const auto special = critical_energies(1.0, 1.0, std::sqrt(3.0));
  CHECK(special.regime == CriticalRegime::massive_v_eq_special);
  REQUIRE(special.energies.size() == 1);
  CHECK(special.energies[0] == 0.0);

  const auto none = critical_energies(1.0, 1.0, 0.9);
  CHECK(none.regime == CriticalRegime::none);
  CHECK(none.energies.empty());

  const auto quarter = critical_energies(1.0, 1.0, 1.0 / std::numbers::sqrt2);
  CHECK(quarter.regime == CriticalRegime::massive_v_eq_c_over_sqrt2);
  CHECK(quarter.energies.size() == 4);

  CHECK(critical_energies(0.0, 1.0, 1.0 / std::numbers::sqrt2).energies.empty());
  CHECK(critical_energies(0.0, 1.0, 1.5).energies.empty());
  CHECK_THROWS_AS(critical_energies(0.0, 1.0, 0.0), InvalidInput);
}

TEST_CASE("Lyapunov exponent examples") {
  LyapunovOptions options;
  options.n_steps = 1'000'000;
  options.n_realizations = 32;

  SUBCASE("massless critical energies") {
    const DisorderSpec spec{0.5, 0.5, DisorderKind::bernoulli, 1};
    for (double e : critical_energies(0.0, 1.0, 0.5).energies) {
      const auto est = lyapunov_exponent(e, spec, 0.0, 1.0, options);
      CHECK(est.gamma <= 1e-3);
      CHECK(est.gamma >= 0.0);
      CHECK(est.std_error >= 0.0);
    }
  }
  SUBCASE("free chain inside the band") {
    DisorderSpec spec;
    spec.kind = DisorderKind::constant_zero;
    options.n_realizations = 2;
    CHECK(lyapunov_exponent(1.0, spec, 0.0, 1.0, options).gamma <= 1e-3);
  }
  SUBCASE("hyperbolic contrast") {
    const DisorderSpec spec{1.5, 0.5, DisorderKind::bernoulli, 1};
    options.n_steps = 100'000;
    options.n_realizations = 8;
    const auto est = lyapunov_exponent(1.5, spec, 0.0, 1.0, options);
    CHECK(est.gamma >= 0.5);
    CHECK(est.resolved_from_zero());
    CHECK(est.loc_length == doctest::Approx(1.0 / est.gamma));
  }
}

TEST_CASE("disjoint streams agree") {
  const DisorderSpec spec{0.5, 0.5, DisorderKind::bernoulli, 7};
  LyapunovOptions a;
  a.n_steps = 100'000;
  a.n_realizations = 16;
  LyapunovOptions b = a;
  b.first_stream = 1000;
  const auto ea = lyapunov_exponent(0.2, spec, 0.0, 1.0, a);
  const auto eb = lyapunov_exponent(0.2, spec, 0.0, 1.0, b);
  const double combined = std::hypot(ea.std_error, eb.std_error);
  CHECK(std::abs(ea.gamma - eb.gamma) <= 4.0 * combined);
  CHECK(ea.gamma > 0.0);
}

TEST_CASE("thread count does not change the estimate") {
  const DisorderSpec spec{0.5, 0.5, DisorderKind::bernoulli, 7};
  LyapunovOptions one;
  one.n_steps = 20'000;
  one.n_realizations = 6;
  LyapunovOptions many = one;
  many.threads = 3;
  CHECK(lyapunov_exponent(0.3, spec, 0.2, 1.0, one).gamma ==
        lyapunov_exponent(0.3, spec, 0.2, 1.0, many).gamma);
}

TEST_CASE("too few steps are rejected") {
  LyapunovOptions options;
  options.n_steps = 100;
  CHECK_THROWS_AS(lyapunov_exponent(0.0, {0.5, 0.5, DisorderKind::bernoulli, 1}, 0.0, 1.0, options),
                  InvalidInput);
}

TEST_CASE("sweep grid includes refined points around catalogue energies") {
  EnergySweepOptions sweep;
  sweep.e_min = -1.0;
  sweep.e_max = 1.0;
  sweep.points = 5;
  sweep.refine_levels = 2;
  const auto energies = sweep_energies(sweep, critical_energies(0.0, 1.0, 0.5));
  CHECK(std::is_sorted(energies.begin(), energies.end()));
  // 5 grid points with E_c = +-0.5 among them, plus 4 refined points around each.
  CHECK(energies.size() == 13);
  CHECK(std::count(energies.begin(), energies.end(), 0.375) == 1);
}

TEST_CASE("sweep CSV header and rows") {
  LyapunovEstimate row;
  row.energy = 0.5;
  row.n_steps = 10;
  row.n_realizations = 2;
  std::ostringstream os;
  write_sweep_csv(os, {row});
  const std::string text = os.str();
  CHECK(text.rfind("energy,gamma,std_error,loc_length,n_steps,n_realizations\n", 0) == 0);
  CHECK(text.find("inf") != std::string::npos);
}
