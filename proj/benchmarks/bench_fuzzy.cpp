#include <benchmark/benchmark.h>

#include "perceptlab/controlsim.hpp"
#include "perceptlab/fuzzy.hpp"
#include "perceptlab/losses.hpp"

using namespace perceptlab;

namespace {

void BM_RestrictionTable(benchmark::State& state) {
  const auto rs = controlsim::rule_table();
  double e = -1.0;
  for (auto _ : state) {
    e = e > 1.0 ? -1.0 : e + 1e-3;
    const double in[] = {e, 0.5 * e};
    benchmark::DoNotOptimize(fuzzy::restriction(rs, in, -0.3 * e));
  }
}
BENCHMARK(BM_RestrictionTable);

void BM_RuleLossRecorded(benchmark::State& state) {
  const auto rs = controlsim::rule_table();
  autodiff::Tape tape;
  const auto mark = tape.mark();
  for (auto _ : state) {
    tape.rewind(mark);
    const double in[] = {0.4, -0.2};
    benchmark::DoNotOptimize(losses::rule_loss(rs, in, tape.leaf(0.1), 5.0).value());
  }
}
BENCHMARK(BM_RuleLossRecorded);

void BM_Hmf(benchmark::State& state) {
  const fuzzy::TriangularFuzzyNumber n(0.15, 0.2, 0.25);
  double mu = 0.0;
  for (auto _ : state) {
    mu = mu >= 1.0 - 1e-4 ? 0.0 : mu + 1e-4;
    benchmark::DoNotOptimize(fuzzy::hmf(n, fuzzy::Granule(mu, 1.0 - mu)));
  }
}
BENCHMARK(BM_Hmf);

}  // namespace
