#include <benchmark/benchmark.h>

#include <vector>

#include "perceptlab/oracle.hpp"

using namespace perceptlab;

namespace {

std::vector<double> grid301() {
  std::vector<double> ts;
  for (int i = 0; i <= 300; ++i) ts.push_back(3.0 * i / 300.0);
  return ts;
}

void BM_Rk4Decay(benchmark::State& state) {
  const auto ode = oracle::CrispODE::from(oracle::Family{oracle::ExpDecay{-0.5, 5.0}});
  const auto ts = grid301();
  for (auto _ : state) benchmark::DoNotOptimize(oracle::rk4(ode, ts, 1e-3));
}
BENCHMARK(BM_Rk4Decay);

void BM_Rk4Oscillator(benchmark::State& state) {
  const auto ode =
      oracle::CrispODE::from(oracle::Family{oracle::DampedOscillator(0.2, 2.0, 1.0, 0.0)});
  const auto ts = grid301();
  for (auto _ : state) benchmark::DoNotOptimize(oracle::rk4(ode, ts, 1e-3));
}
BENCHMARK(BM_Rk4Oscillator);

void BM_AlphaCutEnvelope(benchmark::State& state) {
  const oracle::Family decay = oracle::ExpDecay{-0.5, 5.0};
  const oracle::FuzzyParam fp[] = {{"lambda", fuzzy::TriangularFuzzyNumber(-0.6, -0.5, -0.4)}};
  const auto ts = grid301();
  for (auto _ : state)
    benchmark::DoNotOptimize(oracle::alpha_cut_envelope(decay, fp, 0.5, ts, 9, 1e-2));
}
BENCHMARK(BM_AlphaCutEnvelope);

}  // namespace
