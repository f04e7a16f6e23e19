#include <benchmark/benchmark.h>

#include "diraclab/analysis.hpp"
#include "diraclab/disorder.hpp"
#include "diraclab/dynamics.hpp"
#include "diraclab/transfer.hpp"

using namespace diraclab;

namespace {

// Critical energy: the adapted-basis product path.
void BM_TransferCritical(benchmark::State& state) {
  const auto potential = sample_potential({0.5, 0.5, DisorderKind::bernoulli, 1},
                                          static_cast<std::size_t>(state.range(0)), 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(propagate_transfer(0.5, std::span<const double>(potential.values), 0.0, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TransferCritical)->Arg(1 << 16)->Arg(1 << 20);

// Generic energy: the rescaled standard product.
void BM_TransferGeneric(benchmark::State& state) {
  const auto potential = sample_potential({0.5, 0.5, DisorderKind::bernoulli, 1},
                                          static_cast<std::size_t>(state.range(0)), 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(propagate_transfer(0.2, std::span<const double>(potential.values), 0.0, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TransferGeneric)->Arg(1 << 16)->Arg(1 << 20);

void BM_Diagonalize(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto potential = sample_potential({0.5, 0.5, DisorderKind::bernoulli, 1}, n, 0);
  const HermitianOperator h = build_dirac({n, Boundary::open, 0.0, 1.0}, potential);
  for (auto _ : state) benchmark::DoNotOptimize(diagonalize(h));
}
BENCHMARK(BM_Diagonalize)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TimeAveragedMoment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto potential = sample_potential({0.5, 0.5, DisorderKind::bernoulli, 1}, n, 0);
  const EvolutionPlan plan = diagonalize(build_dirac({n, Boundary::open, 0.0, 1.0}, potential));
  const TimeAveragedMoment moment(plan, initial_state(n, InitialState::upper_delta));
  double t = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(moment(t));
    t += 0.5;
  }
}
BENCHMARK(BM_TimeAveragedMoment)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
