// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "geofno/fft.hpp"
#include "geofno/model.hpp"
#include "geofno/rng.hpp"
#include "geofno/spectral.hpp"
#include "geofno/tape.hpp"
#include "geofno/training.hpp"

namespace {

using namespace geofno;

Tensor uniform_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(shape, std::move(v));
}

void BM_Fft1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<complex> data(n);
  for (auto& z : data) z = {rng.uniform(), rng.uniform()};
  for (auto _ : state) {
    fft::transform(data, false);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Fft1d)->Arg(32)->Arg(64)->Arg(97)->Arg(256)->Arg(1000);

void BM_GridToModes(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor v = uniform_tensor({4, s, s, 32}, rng, -1.0, 1.0);
  const ModeSet modes({12, 12});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(spectral::grid_to_modes(v, modes));
}
BENCHMARK(BM_GridToModes)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EncodePoints(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Tensor v = uniform_tensor({4, n, 32}, rng, -1.0, 1.0);
  const Tensor xi = uniform_tensor({4, n, 2}, rng, 0.0, 1.0);
  const ModeSet modes({12, 12});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(spectral::encode_points(v, xi, modes));
}
BENCHMARK(BM_EncodePoints)->Arg(384)->Arg(1536)->Unit(benchmark::kMillisecond);

ModelConfig bench_model() {
  ModelConfig c;
  c.deform.conditioning = 0;
  return c;
}

void BM_ForwardPoints(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const GeoFnoModel m(bench_model(), 0);
  Rng rng(4);
  const PointBatch b{uniform_tensor({batch, 384, 2}, rng, 0.2, 0.8), uniform_tensor({batch, 384, 1}, rng, 0.5, 1.5),
                     std::nullopt, std::nullopt};
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(m.forward_points(m.params(), b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ForwardPoints)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const GeoFnoModel m(bench_model(), 0);
  Rng rng(5);
  const PointBatch b{uniform_tensor({20, 384, 2}, rng, 0.2, 0.8), uniform_tensor({20, 384, 1}, rng, 0.5, 1.5),
                     std::nullopt, std::nullopt};
  const Tensor target = uniform_tensor({20, 384, 1}, rng, 0.5, 1.5);
  for (auto _ : state) {
    Tape tape;
    std::vector<Tensor> leaves;
    for (const auto& p : m.params()) leaves.push_back(p.with_grad());
    tape.backward(batch_relative_l2(m.forward_points(leaves, b), target));
    benchmark::DoNotOptimize(tape.grad_or_zeros(leaves.front()));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
