#include <doctest.h>

#include <cmath>
#include <sstream>

#include "diraclab/disorder.hpp"
#include "diraclab/error.hpp"

using namespace diraclab;

TEST_CASE("same seed and stream give identical potentials") {
  const DisorderSpec spec{0.5, 0.5, DisorderKind::bernoulli, 42};
  const auto a = sample_potential(spec, 1000, 3);
  const auto b = sample_potential(spec, 1000, 3);
  CHECK(a.values == b.values);
  CHECK(a.stream_index == 3);
  CHECK(a.seed == 42);
  const auto c = sample_potential(spec, 1000, 4);
  CHECK(a.values != c.values);
  const auto d = sample_potential(DisorderSpec{0.5, 0.5, DisorderKind::bernoulli, 43}, 1000, 3);
  CHECK(a.values != d.values);
}

TEST_CASE("values lie in the two-point set") {
  const DisorderSpec spec{0.75, 0.3, DisorderKind::bernoulli, 1};
  for (double x : sample_potential(spec, 500, 0).values) CHECK((x == 0.75 || x == -0.75));
}

TEST_CASE("constant_zero gives zero everywhere") {
  DisorderSpec spec;
  spec.kind = DisorderKind::constant_zero;
  spec.v = 0.0;
  for (double x : sample_potential(spec, 64, 7).values) CHECK(x == 0.0);
}

TEST_CASE("fraction of -v sites matches p") {
  for (double p : {0.5, 0.2}) {
    const DisorderSpec spec{1.0, p, DisorderKind::bernoulli, 9};
    const auto r = sample_potential(spec, 1'000'000, 0);
    std::size_t negative = 0;
    for (double x : r.values) negative += x < 0.0;
    CHECK(std::abs(static_cast<double>(negative) / 1e6 - p) <= 0.002);
  }
}

TEST_CASE("dimer potentials come in equal pairs") {
  const DisorderSpec spec{0.5, 0.5, DisorderKind::dimer, 5};
  const auto r = sample_potential(spec, 101, 2);
  for (std::size_t n = 0; n + 1 < r.size(); n += 2) CHECK(r.values[n] == r.values[n + 1]);
  bool varied = false;
  for (std::size_t n = 2; n < r.size(); n += 2) varied |= r.values[n] != r.values[0];
  CHECK(varied);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(sample_potential({0.0, 0.5, DisorderKind::bernoulli, 1}, 10, 0), InvalidInput);
  CHECK_THROWS_AS(sample_potential({-1.0, 0.5, DisorderKind::bernoulli, 1}, 10, 0), InvalidInput);
  CHECK_THROWS_AS(sample_potential({1.0, 1.3, DisorderKind::bernoulli, 1}, 10, 0), InvalidInput);
  CHECK_THROWS_AS(sample_potential({1.0, 0.0, DisorderKind::dimer, 1}, 10, 0), InvalidInput);
  CHECK_THROWS_AS(sample_potential({1.0, 0.5, DisorderKind::bernoulli, 1}, 3, 0), InvalidInput);
  CHECK_THROWS_AS(disorder_kind_from_string("gaussian"), InvalidInput);
}

TEST_CASE("lattices of different length agree around the centre") {
  const DisorderSpec spec{0.5, 0.5, DisorderKind::bernoulli, 11};
  const auto small = sample_potential(spec, 301, 6);
  const auto large = sample_potential(spec, 601, 6);
  const std::size_t shift = 601 / 2 - 301 / 2;
  for (std::size_t n = 0; n < 301; ++n) CHECK(small.values[n] == large.values[n + shift]);
}

TEST_CASE("counter_uniform is a pure function in [0, 1)") {
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double u = counter_uniform(1, 2, k);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == counter_uniform(1, 2, k));
  }
}

TEST_CASE("potential CSV round trips at full precision") {
  const DisorderSpec spec{0.1, 0.5, DisorderKind::bernoulli, 3};
  const auto r = sample_potential(spec, 8, 0);
  std::ostringstream os;
  write_potential_csv(os, r);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "V");
  for (double x : r.values) {
    double y = 0.0;
    is >> y;
    CHECK(y == x);
  }
}
