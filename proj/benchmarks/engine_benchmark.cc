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

#include <vector>

#include "benchmark/benchmark.h"
#include "dptab/accountant.h"
#include "dptab/datamodel.h"
#include "dptab/engine.h"
#include "dptab/pipeline.h"

namespace dptab {
namespace {

// A synthetic universe: 10 states of 10 counties, 40 race codes, one Alone
// and one AOIC iteration per code at two county levels.
SpecFiles BenchSpec() {
  SpecFiles spec;
  for (int s = 0; s < 10; ++s) {
    for (int c = 0; c < 10; ++c) {
      const std::string county = std::to_string(s * 100 + c);
      spec.geography.push_back({"b" + county, "s" + std::to_string(s), county,
                                "t" + county, "", ""});
    }
  }
  for (int r = 0; r < 40; ++r) {
    const std::string code = "r" + std::to_string(r);
    spec.iterations.push_back({code + "_alone", IterationLevel::kDetailed,
                               AloneFlag::kAlone, CodeKind::kRace, {code}});
    spec.iterations.push_back({code + "_aoic", IterationLevel::kDetailed,
                               AloneFlag::kAloneOrInAnyCombination,
                               CodeKind::kRace, {code}});
  }
  spec.levels = {{"state", GeoLevel::kState, IterationLevel::kDetailed,
                  Rational(2134, 1000), {}},
                 {"county", GeoLevel::kCounty, IterationLevel::kDetailed,
                  Rational(159, 1000), {}}};
  return spec;
}

void BM_RunTabulation(benchmark::State& state) {
  auto universe = Universe::Build(BenchSpec());
  const std::vector<PersonRecord> records =
      GenerateSynthetic(*universe, state.range(0), 3);
  auto config = AdaptiveConfig::Create(Rational(1, 10), {5, 20, 60});
  DiscreteGaussianMechanism mechanism;
  for (auto _ : state) {
    auto plan = LevelBudgetPlan::Create(
        {{"state", Rational(2134, 1000)}, {"county", Rational(159, 1000)}},
        Rational(1, 10), PrivacyDefinition::kZcdp);
    Ledger ledger(*plan);
    auto tables = RunTabulation(records, *universe, *config, mechanism, ledger,
                                {7, static_cast<int>(state.range(1))});
    benchmark::DoNotOptimize(tables);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunTabulation)
    ->Args({10000, 1})
    ->Args({10000, 4})
    ->Args({100000, 4})
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dptab

BENCHMARK_MAIN();
