#pragma once

// Reproducible sampling of two-valued site potentials.
//
// Every site value is a pure function of (seed, stream_index, site key); no
// generator state is shared between calls. Bernoulli keys are the site index
// measured from the lattice centre (n_sites / 2), so lattices of different
// length sampled from the same (seed, stream) agree around their centres.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace diraclab {

enum class DisorderKind { bernoulli, dimer, constant_zero };

std::string to_string(DisorderKind kind);
DisorderKind disorder_kind_from_string(const std::string& s);

struct DisorderSpec {
  double v = 0.5;  ///< site-energy magnitude
  double p = 0.5;  ///< probability of -v
  DisorderKind kind = DisorderKind::bernoulli;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PotentialRealization {
  std::vector<double> values;
  DisorderSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  std::size_t size() const { return values.size(); }
};

/// Counter-based uniform variate in [0, 1) keyed by (seed, stream, counter).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

PotentialRealization sample_potential(const DisorderSpec& spec, std::size_t n_sites,
                                      std::uint64_t stream_index);

/// Header "V" followed by one value per line at full precision.
void write_potential_csv(std::ostream& os, const PotentialRealization& realization);

}  // namespace diraclab
