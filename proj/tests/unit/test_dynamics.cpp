#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "diraclab/analysis.hpp"
#include "diraclab/disorder.hpp"
#include "diraclab/dynamics.hpp"
#include "diraclab/error.hpp"
#include "diraclab/lattice.hpp"

using namespace diraclab;

namespace {

HermitianOperator random_dirac(std::size_t n, double mass, std::uint64_t stream,
                               Boundary b = Boundary::open) {
  const auto v = sample_potential({0.5, 0.5, DisorderKind::bernoulli, 1}, n, stream);
  return build_dirac({n, b, mass, 1.0}, v);
}

}  // namespace

TEST_CASE("decoupled site has eigenvalues +-mc^2") {
  const double m = 0.8, c = 1.5;
  Eigen::MatrixXd block(2, 2);
  block << m * c * c, 0.0, 0.0, -m * c * c;
  const EvolutionPlan plan = diagonalize(HermitianOperator::real_symmetric(block, 1, 2, "sigma3"));
  CHECK(plan.eigenvalues()(0) == doctest::Approx(-m * c * c).epsilon(1e-15));
  CHECK(plan.eigenvalues()(1) == doctest::Approx(m * c * c).epsilon(1e-15));
}

TEST_CASE("diagonalization reconstructs the operator") {
  for (double mass : {0.0, 0.7}) {
    const HermitianOperator h = random_dirac(60, mass, 2);
    const EvolutionPlan plan = diagonalize(h);
    CHECK(plan.reconstruction_error(h) <= 1e-10 * h.max_abs());
    CHECK(plan.orthonormality_error() <= 1e-10);
    for (Eigen::Index j = 1; j < plan.dimension(); ++j)
      CHECK(plan.eigenvalues()(j - 1) <= plan.eigenvalues()(j));
  }
  // Complex storage path.
  Eigen::MatrixXd re = Eigen::MatrixXd::Zero(3, 3), im = Eigen::MatrixXd::Zero(3, 3);
  re << 1, 0.5, 0, 0.5, -1, 0.2, 0, 0.2, 0.3;
  im(0, 2) = 0.4;
  im(2, 0) = -0.4;
  const HermitianOperator hc(re, im, 3, 1, "complex");
  const EvolutionPlan plan = diagonalize(hc);
  CHECK(!plan.is_real());
  CHECK(plan.reconstruction_error(hc) <= 1e-12);
  CHECK(plan.orthonormality_error() <= 1e-12);
}

TEST_CASE("massless free periodic spectrum") {
  const std::size_t n = 50;
  const std::vector<double> zero(n, 0.0);
  const Eigen::VectorXd e = diagonalize(build_dirac({n, Boundary::periodic, 0.0, 1.0}, zero)).eigenvalues();
  std::vector<double> expect;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = 2.0 * std::abs(std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)));
    expect.push_back(w);
    expect.push_back(-w);
  }
  std::sort(expect.begin(), expect.end());
  for (std::size_t j = 0; j < 2 * n; ++j)
    CHECK(std::abs(e(static_cast<Eigen::Index>(j)) - expect[j]) <= 1e-10);
}

TEST_CASE("evolution") {
  const std::size_t n = 40;
  const HermitianOperator h = random_dirac(n, 0.5, 4);
  const EvolutionPlan plan = diagonalize(h);
  const SpinorState psi0 = SpinorState::balanced(n, n / 2);

  SUBCASE("t = 0 returns the initial state") {
    const SpinorState out = evolve_state(plan, psi0, 0.0);
    CHECK((out.amplitudes() - psi0.amplitudes()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("eigenvectors only pick up a phase") {
    const SpinorState eig(plan.eigenvector(17), n, 2);
    const SpinorState out = evolve_state(plan, eig, 3.7);
    CHECK((out.amplitudes().cwiseAbs() - eig.amplitudes().cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("norm and energy are conserved") {
    const double e0 = expectation(h, psi0);
    for (double t : {1.0, 10.0, 100.0}) {
      const SpinorState out = evolve_state(plan, psi0, t);
      CHECK(std::abs(out.norm() - 1.0) <= 1e-10);
      CHECK(std::abs(expectation(h, out) - e0) <= 1e-9 * std::max(1.0, std::abs(e0)));
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(evolve_state(plan, SpinorState::balanced(n + 2, 3), 1.0), InvalidInput);
  }
}

TEST_CASE("second moment examples") {
  SpinorState centred = SpinorState::basis(9, 4, Component::upper);
  CHECK(second_moment(centred) == 0.0);
  CHECK(mean_position(centred) == 0.0);

  SpinorState pair(9, 2);
  pair.amplitudes()(3) = std::sqrt(0.5);
  pair.amplitudes()(9 + 5) = std::sqrt(0.5);
  CHECK(second_moment(pair) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mean_position(pair) == doctest::Approx(0.0));

  SpinorState uniform(5, 1);
  uniform.amplitudes().setConstant(1.0 / std::sqrt(5.0));
  CHECK(second_moment(uniform) == doctest::Approx(2.0).epsilon(1e-15));

  SpinorState edge = SpinorState::scalar_basis(100, 0);
  CHECK(edge_weight(edge) == doctest::Approx(1.0));
  CHECK(edge_weight(SpinorState::scalar_basis(100, 50)) == 0.0);
}

TEST_CASE("time-averaged moment") {
  const std::size_t n = 32;
  const HermitianOperator h = random_dirac(n, 0.3, 9);
  const EvolutionPlan plan = diagonalize(h);
  const SpinorState psi0 = SpinorState::basis(n, n / 2, Component::upper);
  const TimeAveragedMoment moment(plan, psi0);

  SUBCASE("small t limit is the initial second moment") {
    CHECK(moment.initial() == doctest::Approx(second_moment(psi0)).scale(1.0));
    CHECK(std::abs(moment(1e-6) - second_moment(psi0)) <= 1e-9);
  }
  SUBCASE("stationary states keep their second moment") {
    const SpinorState eig(plan.eigenvector(11), n, 2);
    const TimeAveragedMoment stationary(plan, eig);
    for (double t : {0.5, 5.0, 500.0})
      CHECK(stationary(t) == doctest::Approx(second_moment(eig)).epsilon(1e-10));
  }
  SUBCASE("closed form matches trapezoid quadrature") {
    for (double t : {2.0, 7.5}) {
      const std::size_t steps = 20'000;
      const double dt = t / static_cast<double>(steps);
      double sum = 0.5 * (second_moment(psi0) + second_moment(evolve_state(plan, psi0, t)));
      for (std::size_t k = 1; k < steps; ++k)
        sum += second_moment(evolve_state(plan, psi0, dt * static_cast<double>(k)));
      const double quadrature = sum * dt / t;
      CHECK(std::abs(moment(t) - quadrature) <= 1e-6 * quadrature);
    }
  }
  SUBCASE("bounded by the largest squared coordinate") {
    const double bound = std::pow(0.5 * (n - 1), 2);
    for (double t : {0.1, 1.0, 10.0, 1000.0}) {
      CHECK(moment(t) >= 0.0);
      CHECK(moment(t) <= bound);
    }
  }
  SUBCASE("non-positive time is rejected") { CHECK_THROWS_AS(moment(0.0), InvalidInput); }
}

TEST_CASE("moment series") {
  const LatticeConfig config{81, Boundary::open, 0.5, 1.0};
  const DisorderSpec spec{0.5, 0.5, DisorderKind::bernoulli, 3};
  const std::vector<double> times{1e-6, 0.5, 1.0, 2.0, 4.0, 8.0};
  MomentOptions options;
  options.n_realizations = 3;

  const MomentSeries a = moment_series(config, spec, times, options);
  REQUIRE(a.size() == times.size());
  CHECK(a.values[0] == doctest::Approx(0.0).epsilon(1e-9));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.values[i] >= 0.0);
    CHECK(a.std_error[i] >= 0.0);
    CHECK(a.edge_weight[i] >= 0.0);
  }
  CHECK(a.per_realization.size() == 3);

  SUBCASE("bit-identical reruns") {
    options.threads = 2;
    const MomentSeries b = moment_series(config, spec, times, options);
    CHECK(a.values == b.values);
    CHECK(a.std_error == b.std_error);
    CHECK(a.edge_weight == b.edge_weight);
    std::ostringstream oa, ob;
    write_moments_csv(oa, a);
    write_moments_csv(ob, b);
    CHECK(oa.str() == ob.str());
    CHECK(oa.str().rfind("t,M_mean,M_stderr,edge_weight_max\n", 0) == 0);
  }
  SUBCASE("times must increase") {
    const std::vector<double> bad{1.0, 0.5};
    CHECK_THROWS_AS(moment_series(config, spec, bad, options), InvalidInput);
  }
}

TEST_CASE("free massless motion is ballistic") {
  const LatticeConfig config{401, Boundary::open, 0.0, 1.0};
  DisorderSpec spec;
  spec.kind = DisorderKind::constant_zero;
  spec.v = 0.0;
  const auto times = log_time_grid(1.0, light_cone_time(config.n_sites, 1.0), 32);
  const MomentSeries series = moment_series(config, spec, times, {});
  const GrowthFit fit = fit_growth_exponent(series, {20.0, 1e9});
  CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.075));
  CHECK(fit.r_squared > 0.99);
}

TEST_CASE("Ehrenfest relation for an interior packet") {
  const std::size_t n = 201;
  const LatticeConfig config{n, Boundary::open, 0.2, 1.0};
  const auto v = sample_potential({0.3, 0.5, DisorderKind::bernoulli, 2}, n, 0);
  const EvolutionPlan plan = diagonalize(build_dirac(config, v));
  const HermitianOperator velocity = velocity_operator(config);
  const SpinorState psi0 = SpinorState::gaussian(n, 2, 100.0, 6.0, 0.8);

  const double t = 1.0, delta = 1e-3;
  const double derivative = (mean_position_and_velocity(plan, psi0, t + delta, velocity).position -
                             mean_position_and_velocity(plan, psi0, t - delta, velocity).position) /
                            (2.0 * delta);
  const PositionVelocity at = mean_position_and_velocity(plan, psi0, t, velocity);
  CHECK(std::abs(derivative - at.velocity) <= 1e-5);
  for (double s : {0.0, 5.0, 20.0})
    CHECK(std::abs(mean_position_and_velocity(plan, psi0, s, velocity).velocity) <= 1.0 + 1e-12);

  const SpinorState symmetric = SpinorState::gaussian(n, 2, 100.0, 6.0, 0.0);
  CHECK(std::abs(mean_position_and_velocity(plan, symmetric, 0.0, velocity).position) <= 1e-12);
}

TEST_CASE("initial states") {
  CHECK(initial_state(11, InitialState::upper_delta).upper(5) == std::complex<double>(1.0, 0.0));
  CHECK(second_moment(initial_state(11, InitialState::balanced)) == 0.0);
  CHECK(initial_state_from_string(to_string(InitialState::balanced)) == InitialState::balanced);
  CHECK_THROWS_AS(initial_state_from_string("gaussian"), InvalidInput);
}
