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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dptab/accountant.h"
#include "dptab/config.h"
#include "dptab/engine.h"
#include "dptab/noise.h"
#include "dptab/pipeline.h"
#include "dptab/planner.h"
#include "dptab/postprocess.h"
#include "oracles.h"

namespace dptab {
namespace {

const std::filesystem::path kData(DPTAB_TEST_DATA_DIR);

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool condition, const std::string& what) {
    if (!condition) {
      pass = false;
      absl::StrAppend(&detail, detail.empty() ? "" : "; ", what);
    }
  }
};

struct Criterion {
  std::string name;
  double time_limit_seconds;  // 0 for none
  std::function<Outcome()> run;
};

PlannerInput ProductionPlannerInput() {
  PlannerInput input;
  for (const char* id : {"nation_detailed", "state_detailed"}) {
    input.levels.push_back({id, 3});
  }
  for (const char* id : {"county_detailed", "tract_detailed", "place_detailed",
                         "aiannh_detailed"}) {
    input.levels.push_back({id, 11});
  }
  for (const char* id : {"nation_regional", "state_regional",
                         "county_regional", "tract_regional",
                         "place_regional"}) {
    input.levels.push_back({id, 50});
  }
  return input;
}

Outcome BudgetTable() {
  // Published unbounded step-2 and total budgets per MOE target.
  const std::map<int64_t, std::pair<double, double>> published = {
      {3, {1.921, 2.134}}, {11, {0.143, 0.159}}, {50, {0.007, 0.008}}};
  Outcome out;
  auto report = ComputePlannerReport(ProductionPlannerInput());
  if (!report.ok()) return {false, std::string(report.status().message())};
  double worst = 0;
  for (const PlannerLevelRow& row : report->levels) {
    const auto& [step2, total] = published.at(row.moe);
    const double d1 = std::abs(ToDouble(row.budget.step2) - step2);
    const double d2 = std::abs(ToDouble(row.budget.total) - total);
    worst = std::max({worst, d1, d2});
    out.Require(d1 <= 1e-3 && d2 <= 1e-3,
                absl::StrCat(row.level_id, " off by ", std::max(d1, d2)));
    out.Require(row.bounded_step2 == 2 * row.budget.step2 &&
                    row.bounded_total == 2 * row.budget.total,
                absl::StrCat(row.level_id, " bounded is not 2x"));
  }
  out.Require(report->total_bounded == 2 * report->total_unbounded,
              "bounded total is not 2x");
  if (out.pass) {
    out.detail = absl::StrFormat("11 levels, max deviation %.6f, total %s",
                                 worst,
                                 FormatDecimal(report->total_unbounded, 4));
  }
  return out;
}

Outcome ThresholdTable() {
  Outcome out;
  const std::vector<std::pair<Rational, int64_t>> published = {
      {Rational(8, 1000), 93}, {Rational(159, 1000), 21},
      {Rational(543, 1000), 11}};
  std::vector<std::string> got;
  for (const auto& [rho, expected] : published) {
    auto t = DeriveThreshold(rho, Rational(1, 10), 9, 0.9999,
                             PrivacyDefinition::kZcdp);
    if (!t.ok()) return {false, std::string(t.status().message())};
    got.push_back(absl::StrCat(FormatDecimal(rho, 3), "->", *t));
    out.Require(std::abs(*t - expected) <= 1,
                absl::StrCat("rho ", FormatDecimal(rho, 3), " gave ", *t,
                             ", expected ", expected));
  }
  if (out.pass) out.detail = absl::StrJoin(got, " ");
  return out;
}

Outcome EmpiricalMoe() {
  Outcome out;
  const Rational gamma(1, 10);
  std::vector<std::string> got;
  for (int64_t moe : {3, 11, 50}) {
    auto budget = RhoForMoe(moe, gamma, 9);
    auto analytic = MoeForLevel(budget->total, gamma, 9);
    DiscreteGaussianMechanism mechanism;
    RandomSource rng(2026, static_cast<uint64_t>(moe));
    constexpr int kDraws = 100000;
    std::map<int64_t, int64_t> abs_counts;
    const std::vector<int64_t> zero = {0};
    for (int i = 0; i < kDraws; ++i) {
      auto x = mechanism.NoisyCount(zero, budget->per_group_step2, rng);
      ++abs_counts[std::abs(x->front())];
    }
    // Smallest h with at least 95% of draws in [-h, h].
    int64_t covered = 0;
    int64_t half_width = -1;
    for (const auto& [h, n] : abs_counts) {
      covered += n;
      if (covered >= kDraws * 95 / 100) {
        half_width = h;
        break;
      }
    }
    got.push_back(absl::StrCat(moe, ":", half_width));
    out.Require(half_width == moe && *analytic == moe,
                absl::StrCat("target ", moe, " empirical ", half_width,
                             " analytic ", *analytic));
  }
  if (out.pass) out.detail = absl::StrCat("half-widths ", absl::StrJoin(got, " "));
  return out;
}

Outcome SamplerFidelity() {
  Outcome out;
  std::vector<std::string> got;
  for (const Rational& s2 : {Rational(1), Rational(4), Rational(3147, 100)}) {
    auto noise = DiscreteGaussian::Create(s2);
    const testing::DiscreteGaussianOracle oracle(ToDouble(s2));
    RandomSource rng(77, static_cast<uint64_t>(ToDouble(s2) * 100));
    constexpr int64_t kSamples = 1000000;
    std::map<int64_t, int64_t> observed;
    double sq = 0;
    for (int64_t i = 0; i < kSamples; ++i) {
      const int64_t x = noise->Sample(rng);
      ++observed[x];
      sq += static_cast<double>(x) * x;
    }
    const int64_t range =
        static_cast<int64_t>(std::floor(6 * std::sqrt(ToDouble(s2))));
    std::map<int64_t, double> probability;
    for (int64_t x = -range; x <= range; ++x) {
      probability[x] = static_cast<double>(oracle.Pmf(x));
    }
    int dof = 0;
    const double stat =
        testing::ChiSquare(observed, probability, kSamples, &dof);
    const double critical = testing::ChiSquareCritical(dof, 1e-3);
    const double variance = sq / kSamples;
    const double rel =
        std::abs(variance - static_cast<double>(oracle.Variance())) /
        static_cast<double>(oracle.Variance());
    got.push_back(absl::StrFormat("s2=%s chi2=%.1f/%.1f dof=%d var_err=%.4f",
                                  FormatDecimal(s2, 2), stat, critical, dof,
                                  rel));
    out.Require(stat < critical,
                absl::StrCat("chi-square rejects at sigma^2=", ToDouble(s2)));
    out.Require(rel < 0.02,
                absl::StrCat("variance off by ", rel, " at sigma^2=",
                             ToDouble(s2)));
  }
  if (out.pass) out.detail = absl::StrJoin(got, ", ");
  return out;
}

absl::StatusOr<LoadedInputs> GoldenWithSyntheticPersons(int64_t count,
                                                        uint64_t seed,
                                                        RunConfig* config) {
  auto kv = KeyValueConfig::Load(kData / "golden" / "run.cfg");
  if (!kv.ok()) return kv.status();
  auto parsed = ParseRunConfig(*kv);
  if (!parsed.ok()) return parsed.status();
  *config = *parsed;
  auto inputs = LoadAndValidate(*config);
  if (!inputs.ok()) return inputs.status();
  auto universe = Universe::Build(inputs->spec);
  if (!universe.ok()) return universe.status();
  inputs->persons.records = GenerateSynthetic(*universe, count, seed);
  inputs->persons.lines.assign(inputs->persons.records.size(), 0);
  const ValidationReport report = ValidateInputs(inputs->persons, *universe);
  if (!report.ok()) return report.ToStatus();
  return inputs;
}

Outcome BudgetConservation() {
  Outcome out;
  RunConfig config;
  auto inputs = GoldenWithSyntheticPersons(20000, 9, &config);
  if (!inputs.ok()) return {false, std::string(inputs.status().message())};
  out.Require(inputs->spec.levels.size() == 11, "fixture must have 11 levels");
  std::vector<std::string> got;
  for (Region region : {Region::kUS, Region::kPR}) {
    auto result = RunRegion(config, *inputs, region);
    if (!result.ok()) return {false, std::string(result.status().message())};
    out.Require(result->spent_unbounded == Rational(4944, 1000),
                absl::StrCat(RegionName(region), " spent ",
                             FormatExact(result->spent_unbounded, 6)));
    out.Require(result->spent_bounded == Rational(9888, 1000),
                absl::StrCat(RegionName(region), " bounded ",
                             FormatExact(result->spent_bounded, 6)));
    got.push_back(absl::StrCat(RegionName(region), " ",
                               FormatExact(result->spent_unbounded, 3),
                               " bounded ",
                               FormatExact(result->spent_bounded, 3)));
  }
  if (out.pass) out.detail = absl::StrJoin(got, ", ");
  return out;
}

Outcome SuppressionCalibration() {
  Outcome out;
  const Rational level_rho(159, 1000);
  const Rational gamma(1, 10);
  const Rational group_rho = level_rho / 9;
  // High thresholds keep every group in the Total tier.
  const Thresholds thresholds{100000, 1000000, 10000000};
  auto threshold =
      DeriveThreshold(level_rho, gamma, 9, 0.9999, PrivacyDefinition::kZcdp);
  const std::map<std::string, int64_t, std::less<>> level_thresholds = {
      {"county", *threshold}};
  DiscreteGaussianMechanism mechanism;
  const PopulationGroup group{GeoLevel::kCounty, "c", "i"};

  auto run_trials = [&](int64_t n, int64_t trials, uint64_t stream,
                        std::vector<int64_t>* released) {
    std::vector<Demographic> people(n, Demographic{Sex::kFemale, 40});
    RandomSource rng(31337, stream);
    int64_t suppressed = 0;
    for (int64_t t = 0; t < trials; ++t) {
      auto noisy = TabulatePopulationGroup(people, group, false, group_rho,
                                           thresholds, gamma, mechanism, rng);
      noisy->level_id = "county";
      std::vector<PublishedTable> tables = {Publish(*noisy)};
      if (!Suppress(tables, level_thresholds).empty()) {
        ++suppressed;
      } else if (released != nullptr) {
        released->push_back(tables[0].cells[0].count - n);
      }
    }
    return suppressed;
  };

  constexpr int64_t kTrials = 100000;
  const int64_t zero_suppressed = run_trials(0, kTrials, 1, nullptr);
  const double frequency = static_cast<double>(zero_suppressed) / kTrials;
  out.Require(frequency >= 0.9997,
              absl::StrCat("zero suppression frequency ", frequency));

  const int64_t n = *threshold / 2;
  std::vector<int64_t> released;
  constexpr int64_t kBiasTrials = 400000;
  run_trials(n, kBiasTrials, 2, &released);
  auto noise =
      DiscreteGaussian::Create(Stage2SigmaSquared(level_rho, gamma, 9));
  const double expected = ReleaseBias(n, *noise, *threshold);
  double mean = 0, sq = 0;
  for (int64_t e : released) {
    mean += static_cast<double>(e);
    sq += static_cast<double>(e) * e;
  }
  const double k = static_cast<double>(released.size());
  mean /= k;
  const double se = std::sqrt((sq / k - mean * mean) / k);
  out.Require(released.size() > 100, "too few releases for the bias check");
  out.Require(std::abs(mean - expected) <= 3 * se,
              absl::StrFormat("bias %.4f vs oracle %.4f (se %.4f)", mean,
                              expected, se));
  if (out.pass) {
    out.detail = absl::StrFormat(
        "T=%d zero-suppression %.5f; n=%d bias %.4f vs %.4f (se %.4f, %d "
        "releases)",
        *threshold, frequency, n, mean, expected, se, released.size());
  }
  return out;
}

Outcome TierLogic() {
  Outcome out;
  ZeroNoiseMechanism mechanism;
  const std::vector<std::pair<int64_t, Tier>> cases = {
      {9, Tier::kTotal},       {10, Tier::kSexByAge4}, {99, Tier::kSexByAge4},
      {100, Tier::kSexByAge9}, {999, Tier::kSexByAge9},
      {1000, Tier::kSexByAge23}};
  std::vector<std::string> got;
  for (const auto& [size, tier] : cases) {
    std::vector<Demographic> people;
    for (int64_t i = 0; i < size; ++i) {
      people.push_back({i % 2 ? Sex::kMale : Sex::kFemale,
                        static_cast<int32_t>(i % 100)});
    }
    RandomSource rng(1, 0);
    auto table = TabulatePopulationGroup(
        people, {GeoLevel::kCounty, "c", "i"}, false, Rational(1),
        Thresholds{10, 100, 1000}, Rational(1, 10), mechanism, rng);
    got.push_back(absl::StrCat(size, "->", TierName(table->tier)));
    out.Require(table->tier == tier,
                absl::StrCat(size, " selected ", TierName(table->tier)));
  }
  if (out.pass) out.detail = absl::StrJoin(got, " ");
  return out;
}

Outcome PostprocessIdentities() {
  Outcome out;
  // Marginals on random tables.
  RandomSource rng(4, 4);
  const Tier tiers[] = {Tier::kSexByAge4, Tier::kSexByAge9, Tier::kSexByAge23};
  constexpr int kCases = 10000;
  for (int c = 0; c < kCases && out.pass; ++c) {
    NoisyTable noisy;
    noisy.level_id = "county";
    noisy.group = {GeoLevel::kCounty, "c", "i"};
    noisy.tier = tiers[rng.UniformBelow(3)];
    for (size_t i = 0; i < CellCount(noisy.tier); ++i) {
      noisy.cells.push_back(static_cast<int64_t>(rng.UniformBelow(2001)) -
                            1000);
    }
    auto table = AttachMarginals(noisy);
    if (!table.ok()) return {false, std::string(table.status().message())};
    const size_t half = noisy.cells.size() / 2;
    const int64_t male = std::accumulate(noisy.cells.begin(),
                                         noisy.cells.begin() + half, 0LL);
    const int64_t female = std::accumulate(noisy.cells.begin() + half,
                                           noisy.cells.end(), 0LL);
    const auto& cells = table->cells;
    out.Require(cells.size() == noisy.cells.size() + 3, "wrong cell count");
    if (!out.pass) break;
    out.Require(cells[0].count == male + female && cells[1].count == male &&
                    cells[half + 2].count == female,
                absl::StrCat("marginal mismatch in case ", c));
    for (size_t i = 0; i < half; ++i) {
      out.Require(cells[2 + i].count == noisy.cells[i] &&
                      cells[half + 3 + i].count == noisy.cells[half + i],
                  absl::StrCat("cell altered in case ", c));
    }
  }

  // Coterminous fixup on the DC fixture.
  auto kv = KeyValueConfig::Load(kData / "dc" / "run.cfg");
  auto config = ParseRunConfig(*kv);
  auto inputs = LoadAndValidate(*config);
  if (!inputs.ok() || !inputs->report.ok()) {
    return {false, "cannot load the DC fixture"};
  }
  const SpecFiles us = RestrictToRegion(inputs->spec, Region::kUS, "72");
  auto universe = Universe::Build(us);
  auto plan_levels = std::vector<LevelAllocation>();
  for (const LevelSpec& l : us.levels) {
    plan_levels.push_back({l.level_id, l.budget});
  }
  auto plan = LevelBudgetPlan::Create(plan_levels, config->gamma,
                                      PrivacyDefinition::kZcdp);
  auto adaptive = AdaptiveConfig::Create(config->gamma, config->thresholds);
  int fixups = 0;
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    Ledger ledger(*plan);
    auto noisy = RunTabulation(inputs->persons.records, *universe, *adaptive,
                               DiscreteGaussianMechanism(), ledger, {seed, 1});
    std::vector<PublishedTable> tables = PublishAll(*noisy);
    std::map<std::string, int64_t, std::less<>> thresholds;
    for (const LevelSpec& l : us.levels) {
      if (IsSubState(l.geo_level)) thresholds[l.level_id] = 21;
    }
    Suppress(tables, thresholds);
    const std::vector<PublishedTable> before = tables;
    fixups += CoterminousFixup(tables, inputs->coterminous);
    // Donor consistency: every member matches the first unsuppressed member
    // in ORDER before the fixup.
    for (const CoterminousSet& set : inputs->coterminous.sets) {
      std::set<std::string> iterations;
      for (const PublishedTable& t : tables) {
        iterations.insert(t.group.iteration_id);
      }
      for (const std::string& iteration : iterations) {
        std::vector<size_t> members;
        for (GeoLevel level : inputs->coterminous.order) {
          for (const auto& [member_level, entity] : set.members) {
            if (member_level != level) continue;
            for (size_t i = 0; i < tables.size(); ++i) {
              if (tables[i].group ==
                  PopulationGroup{level, entity, iteration}) {
                members.push_back(i);
              }
            }
          }
        }
        const auto donor =
            std::find_if(members.begin(), members.end(),
                         [&](size_t i) { return !before[i].suppressed; });
        for (size_t i : members) {
          if (donor == members.end()) {
            out.Require(tables[i].suppressed, "donorless set was released");
            continue;
          }
          out.Require(!tables[i].suppressed &&
                          tables[i].cells == before[*donor].cells &&
                          tables[i].tier == before[*donor].tier,
                      absl::StrCat("member differs from donor for ",
                                   iteration));
        }
      }
    }
    const std::vector<PublishedTable> once = tables;
    out.Require(CoterminousFixup(tables, inputs->coterminous) == 0,
                "second fixup changed tables");
    for (size_t i = 0; i < tables.size(); ++i) {
      out.Require(tables[i].cells == once[i].cells &&
                      tables[i].suppressed == once[i].suppressed,
                  "fixup is not idempotent");
    }
  }
  out.Require(fixups > 0, "fixture never exercised an overwrite");
  if (out.pass) {
    out.detail = absl::StrCat(kCases, " random tables; 25 DC runs, ", fixups,
                              " overwrites, idempotent");
  }
  return out;
}

// Every group of every level is tabulated for both neighbors, and every
// group ends up either published or in the suppression log.
Outcome DifferentialPresence() {
  Outcome out;
  RunConfig config;
  auto inputs = GoldenWithSyntheticPersons(3000, 21, &config);
  if (!inputs.ok()) return {false, std::string(inputs.status().message())};
  LoadedInputs neighbor_removed = *inputs;
  neighbor_removed.persons.records.erase(
      neighbor_removed.persons.records.begin() + 17);
  neighbor_removed.persons.lines.pop_back();
  LoadedInputs neighbor_added = *inputs;
  neighbor_added.persons.records.push_back(inputs->persons.records[5]);
  neighbor_added.persons.lines.push_back(0);

  auto group_keys = [&](const LoadedInputs& data, Region region)
      -> absl::StatusOr<std::set<std::string>> {
    auto result = RunRegion(config, data, region);
    if (!result.ok()) return result.status();
    std::set<std::string> keys;
    for (const OutputRow& row : result->rows) {
      keys.insert(absl::StrCat(GeoLevelName(row.geo_level), "|", row.entity_id,
                               "|", row.iteration_id));
    }
    for (const SuppressionLogEntry& e : result->suppression_log) {
      keys.insert(absl::StrCat(GeoLevelName(e.group.geo_level), "|",
                               e.group.entity_id, "|", e.group.iteration_id));
    }
    return keys;
  };
  size_t groups = 0;
  for (Region region : {Region::kUS, Region::kPR}) {
    auto base = group_keys(*inputs, region);
    auto removed = group_keys(neighbor_removed, region);
    auto added = group_keys(neighbor_added, region);
    if (!base.ok() || !removed.ok() || !added.ok()) {
      return {false, "pipeline failed"};
    }
    // Expected: the KeySet of every level, independent of the records.
    auto universe = Universe::Build(
        RestrictToRegion(inputs->spec, region, config.pr_state));
    std::set<std::string> expected;
    for (size_t l = 0; l < universe->level_count(); ++l) {
      for (const KeySetGroup& g : universe->BuildKeySet(l).groups) {
        expected.insert(absl::StrCat(GeoLevelName(g.group.geo_level), "|",
                                     g.group.entity_id, "|",
                                     g.group.iteration_id));
      }
    }
    out.Require(*base == expected, "groups differ from the KeySet");
    out.Require(*base == *removed && *base == *added,
                absl::StrCat(RegionName(region),
                             ": neighbors publish different groups"));
    groups += base->size();
  }
  if (out.pass) {
    out.detail = absl::StrCat(groups,
                              " groups identical across add/remove neighbors");
  }
  return out;
}

int RunAll() {
  const std::vector<Criterion> criteria = {
      {"moe_budget_table", 1.0, BudgetTable},
      {"suppression_thresholds", 1.0, ThresholdTable},
      {"moe_empirical", 30.0, EmpiricalMoe},
      {"sampler_fidelity", 60.0, SamplerFidelity},
      {"budget_conservation", 0, BudgetConservation},
      {"suppression_calibration", 0, SuppressionCalibration},
      {"tier_logic", 0, TierLogic},
      {"postprocess_identities", 0, PostprocessIdentities},
      {"differential_presence", 0, DifferentialPresence},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome = c.run();
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    if (c.time_limit_seconds > 0 && seconds > c.time_limit_seconds) {
      outcome.Require(false, absl::StrFormat("took %.2f s, limit %.0f s",
                                             seconds, c.time_limit_seconds));
    }
    if (!outcome.pass) ++failures;
    std::printf("%s %s (%.2f s): %s\n", outcome.pass ? "PASS" : "FAIL",
                c.name.c_str(), seconds, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace dptab

int main() { return dptab::RunAll(); }
