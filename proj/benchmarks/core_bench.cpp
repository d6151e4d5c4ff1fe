#include <benchmark/benchmark.h>

#include "csynth/dataio.hpp"
#include "csynth/reference_data.hpp"
#include "csynth/rng.hpp"
#include "csynth/signature.hpp"
#include "csynth/sinkhorn.hpp"
#include "csynth/tape.hpp"

namespace {

using namespace csynth;

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

void BM_TapeMatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor(n, n, 1);
  const Tensor b = random_tensor(n, n, 2);
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Var x = tape.input(a);
    const ad::Var y = tape.input(b);
    const ad::Var out = tape.sum(tape.tanh(tape.matmul(x, y)));
    benchmark::DoNotOptimize(tape.backward(out));
  }
}
BENCHMARK(BM_TapeMatmulBackward)->Arg(16)->Arg(64)->Arg(128);

void BM_PathSignature(benchmark::State& state) {
  const auto depth = static_cast<std::size_t>(state.range(0));
  const Tensor path = random_tensor(30, 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(sig::signature(path, depth));
}
BENCHMARK(BM_PathSignature)->DenseRange(2, 4);

void BM_BatchSignatures(benchmark::State& state) {
  const auto windows = data::windowize(stoch::reference_price_table(), 30, 1);
  const sig::SignatureOptions opts{static_cast<std::size_t>(state.range(0)), true, false};
  for (auto _ : state) benchmark::DoNotOptimize(sig::batch_signatures(windows, opts));
}
BENCHMARK(BM_BatchSignatures)->Arg(2)->Arg(3);

void BM_Sinkhorn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor cost = loss::squared_distance(random_tensor(n, 8, 4), random_tensor(n, 8, 5));
  loss::SinkhornConfig cfg;
  cfg.tolerance = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(loss::sinkhorn(cost, cfg));
}
BENCHMARK(BM_Sinkhorn)->Arg(32)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
