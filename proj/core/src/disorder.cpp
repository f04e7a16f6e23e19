#include "diraclab/disorder.hpp"

#include <cmath>
#include <ostream>

#include "diraclab/error.hpp"

namespace diraclab {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Two's-complement reinterpretation keeps negative site keys distinct.
std::uint64_t centred_key(std::size_t site, std::size_t n_sites) {
  const auto offset = static_cast<std::int64_t>(site) - static_cast<std::int64_t>(n_sites / 2);
  return static_cast<std::uint64_t>(offset);
}

}  // namespace

std::string to_string(DisorderKind kind) {
  switch (kind) {
    case DisorderKind::bernoulli: return "bernoulli";
    case DisorderKind::dimer: return "dimer";
    case DisorderKind::constant_zero: return "constant_zero";
  }
  return "unknown";
}

DisorderKind disorder_kind_from_string(const std::string& s) {
  if (s == "bernoulli") return DisorderKind::bernoulli;
  if (s == "dimer") return DisorderKind::dimer;
  if (s == "constant_zero" || s == "zero") return DisorderKind::constant_zero;
  throw InvalidInput("unknown disorder kind '" + s + "' (bernoulli, dimer, constant_zero)");
}

void DisorderSpec::validate() const {
  if (kind == DisorderKind::constant_zero) return;
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidInput("disorder strength v must be > 0 for random potentials");
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("probability p must lie in (0, 1)");
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(stream * kGolden + 1));
  const std::uint64_t bits = splitmix64(key ^ splitmix64(counter));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

PotentialRealization sample_potential(const DisorderSpec& spec, std::size_t n_sites,
                                      std::uint64_t stream_index) {
  spec.validate();
  if (n_sites < 4) throw InvalidInput("potential needs at least 4 sites");

  PotentialRealization out;
  out.spec = spec;
  out.seed = spec.seed;
  out.stream_index = stream_index;
  out.values.assign(n_sites, 0.0);

  auto draw = [&](std::uint64_t key) {
    return counter_uniform(spec.seed, stream_index, key) < spec.p ? -spec.v : spec.v;
  };

  switch (spec.kind) {
    case DisorderKind::constant_zero:
      break;
    case DisorderKind::bernoulli:
      for (std::size_t n = 0; n < n_sites; ++n) out.values[n] = draw(centred_key(n, n_sites));
      break;
    case DisorderKind::dimer:
      for (std::size_t n = 0; n < n_sites; n += 2) {
        const double value = draw(n / 2);
        out.values[n] = value;
        if (n + 1 < n_sites) out.values[n + 1] = value;
      }
      break;
  }
  return out;
}

void write_potential_csv(std::ostream& os, const PotentialRealization& realization) {
  const auto old_precision = os.precision(17);
  os << "V\n";
  for (double value : realization.values) os << value << '\n';
  os.precision(old_precision);
}

}  // namespace diraclab
