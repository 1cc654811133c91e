/*
Copyright 2026 The GGBall Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include <benchmark/benchmark.h>

#include <random>

#include "ggball/evaluation.hpp"
#include "ggball/io.hpp"
#include "ggball/phantom.hpp"
#include "ggball/radiator.hpp"
#include "ggball/reconstruction.hpp"

using namespace ggball;

namespace {

std::vector<BallStateAtT> random_states(std::size_t n, double half) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-half, half), a(0.4, 1.0);
  std::vector<BallStateAtT> s(n);
  for (auto& b : s) b = {a(rng), 1.0, {u(rng), u(rng), u(rng)}};
  return s;
}

const RunConfig& desk() {
  static const RunConfig cfg = RunConfig::preset_named("desk-heart");
  return cfg;
}

}  // namespace

// Fast path vs every sample, desk array, ball count from the argument.
static void BM_ForwardFrame(benchmark::State& state) {
  const SensorArray arr = make_array(desk());
  const auto balls = random_states(static_cast<std::size_t>(state.range(0)), 10.0);
  const RadiatorOptions opts{.exact = state.range(1) != 0};
  for (auto _ : state) {
    TraceBuffer tb = forward_frame(balls, arr, opts);
    benchmark::DoNotOptimize(tb.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<long>(arr.size()));
}
BENCHMARK(BM_ForwardFrame)->Args({200, 0})->Args({800, 0})->Args({200, 1})->Unit(benchmark::kMillisecond);

static void BM_StateGradients(benchmark::State& state) {
  const SensorArray arr = make_array(desk());
  const auto balls = random_states(static_cast<std::size_t>(state.range(0)), 10.0);
  TraceBuffer residual = forward_frame(balls, arr);
  for (auto _ : state) {
    auto g = state_gradients(balls, arr, residual);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<long>(arr.size()));
}
BENCHMARK(BM_StateGradients)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

static void BM_Voxelize(benchmark::State& state) {
  const GridSpec grid = make_grid(desk());
  const auto balls = random_states(static_cast<std::size_t>(state.range(0)), 10.0);
  for (auto _ : state) {
    VoxelGrid v = voxelize(balls, grid);
    benchmark::DoNotOptimize(v.values().data());
  }
}
BENCHMARK(BM_Voxelize)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

static void BM_Ssim(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MapImage a, b;
  a.rows = b.rows = a.cols = b.cols = n;
  for (std::size_t i = 0; i < n * n; ++i) {
    a.values.push_back(u(rng));
    b.values.push_back(u(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

static void BM_Ubp(benchmark::State& state) {
  const SensorArray arr = make_array(desk());
  const GridSpec grid = make_grid(desk());
  const TraceBuffer tb = forward_frame(random_states(50, 8.0), arr);
  for (auto _ : state) {
    VoxelGrid v = ubp_reconstruct(tb, arr, grid);
    benchmark::DoNotOptimize(v.values().data());
  }
}
BENCHMARK(BM_Ubp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
