#include <benchmark/benchmark.h>

#include "perceptlab/autodiff.hpp"
#include "perceptlab/network.hpp"

using namespace perceptlab;
using autodiff::Scalar;
using autodiff::Tape;

namespace {

void BM_RecordChain(benchmark::State& state) {
  Tape tape;
  const Scalar x = tape.leaf(1.5);
  const std::size_t mark = tape.mark();
  const auto n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    tape.rewind(mark);
    Scalar acc = tape.at(x.node());
    for (int i = 0; i < n / 2; ++i) {
      acc = acc * 1.0000001;
      acc = acc + x;
    }
    benchmark::DoNotOptimize(acc.value());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RecordChain)->Arg(100000);

void BM_MlpForward(benchmark::State& state) {
  Tape tape;
  auto net = network::Mlp::init(tape, {1, 32, 32, 1}, 0);
  const std::size_t mark = tape.mark();
  for (auto _ : state) {
    tape.rewind(mark);
    benchmark::DoNotOptimize(net.forward(Scalar(0.7)).value());
  }
}
BENCHMARK(BM_MlpForward);

void BM_ForwardPlusTimeDerivative(benchmark::State& state) {
  Tape tape;
  auto net = network::Mlp::init(tape, {1, 32, 32, 1}, 0);
  const std::size_t mark = tape.mark();
  for (auto _ : state) {
    tape.rewind(mark);
    const Scalar t = tape.leaf(0.7);
    const Scalar x = net.forward(t);
    benchmark::DoNotOptimize(autodiff::derivative(x, t).value());
  }
}
BENCHMARK(BM_ForwardPlusTimeDerivative);

void BM_SecondDerivative(benchmark::State& state) {
  Tape tape;
  auto net = network::Mlp::init(tape, {1, 32, 32, 1}, 0);
  const std::size_t mark = tape.mark();
  for (auto _ : state) {
    tape.rewind(mark);
    const Scalar t = tape.leaf(0.7);
    const Scalar x = net.forward(t);
    const Scalar xd = autodiff::derivative(x, t);
    benchmark::DoNotOptimize(autodiff::derivative(xd, t).value());
  }
}
BENCHMARK(BM_SecondDerivative);

void BM_GradientSweep(benchmark::State& state) {
  Tape tape;
  auto net = network::Mlp::init(tape, {1, 32, 32, 1}, 0);
  const auto params = net.parameters();
  const std::size_t mark = tape.mark();
  for (auto _ : state) {
    tape.rewind(mark);
    Scalar acc(0.0);
    for (int i = 0; i < 32; ++i) {
      const Scalar t = tape.leaf(i * 0.1);
      const Scalar x = net.forward(t);
      const Scalar r = autodiff::derivative(x, t) + 0.5 * x;
      acc = acc + r * r;
    }
    benchmark::DoNotOptimize(autodiff::gradient(acc / 32.0, params));
  }
}
BENCHMARK(BM_GradientSweep);

}  // namespace

BENCHMARK_MAIN();
