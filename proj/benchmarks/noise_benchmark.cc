//
// Copyright 2026 The dptab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <cstdint>

#include "benchmark/benchmark.h"
#include "dptab/noise.h"
#include "dptab/random.h"
#include "dptab/rational.h"

namespace dptab {
namespace {

// Argument is 100 * sigma^2.
void BM_DiscreteGaussianSample(benchmark::State& state) {
  auto noise = DiscreteGaussian::Create(Rational(state.range(0), 100));
  RandomSource rng(1, 1);
  int64_t sink = 0;
  for (auto _ : state) sink += noise->Sample(rng);
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(BM_DiscreteGaussianSample)->Arg(100)->Arg(400)->Arg(3147)->Arg(62500);

// Argument is 100 * epsilon.
void BM_GeometricSample(benchmark::State& state) {
  auto noise = TwoSidedGeometric::Create(Rational(state.range(0), 100));
  RandomSource rng(1, 2);
  int64_t sink = 0;
  for (auto _ : state) sink += noise->Sample(rng);
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(BM_GeometricSample)->Arg(10)->Arg(50)->Arg(200);

void BM_InverseCdf(benchmark::State& state) {
  for (auto _ : state) {
    auto noise = DiscreteGaussian::Create(Rational(625));
    benchmark::DoNotOptimize(noise->InverseCdf(0.9999));
  }
}
BENCHMARK(BM_InverseCdf);

}  // namespace
}  // namespace dptab

BENCHMARK_MAIN();
