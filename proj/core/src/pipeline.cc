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

#include "dptab/pipeline.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "dptab/random.h"

namespace dptab {
namespace {

// Stream used by GenerateSynthetic; disjoint from tabulation streams, which
// keep the top bits below 2^24.
constexpr uint64_t kSyntheticStream = ~uint64_t{0};
constexpr int32_t kSyntheticMaxAge = 100;

absl::Status WriteFile(const std::filesystem::path& path,
                       const std::string& contents) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    return absl::InternalError(absl::StrCat(
        "cannot create '", path.parent_path().string(), "': ", ec.message()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  out.close();
  if (!out) {
    return absl::InternalError(
        absl::StrCat("failed to write '", path.string(), "'"));
  }
  return absl::OkStatus();
}

std::string CsvField(absl::string_view value) {
  if (value.find_first_of(",\"\n") == absl::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string FormatLog(const std::vector<SuppressionLogEntry>& log) {
  std::string out = "level_id,geo_level,entity_id,iteration_id,noisy_total,threshold\n";
  for (const SuppressionLogEntry& e : log) {
    absl::StrAppend(&out, CsvField(e.level_id), ",",
                    GeoLevelName(e.group.geo_level), ",",
                    CsvField(e.group.entity_id), ",",
                    CsvField(e.group.iteration_id), ",", e.noisy_total, ",",
                    e.threshold, "\n");
  }
  return out;
}

}  // namespace

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
      return kExitValidation;
    case absl::StatusCode::kResourceExhausted:
      return kExitBudget;
    default:
      return kExitIo;
  }
}

absl::StatusOr<RunConfig> ParseRunConfig(const KeyValueConfig& kv) {
  if (auto s = kv.CheckKnown(
          {"persons", "geo", "iterations", "levels", "total_only",
           "exclusions", "coterminous", "output_dir", "privacy_definition",
           "mechanism", "gamma", "thresholds", "suppression_p", "seed",
           "region", "race_cap", "pr_state_code", "threads"},
          {"thresholds."});
      !s.ok()) {
    return s;
  }
  RunConfig config;
  struct PathKey {
    const char* key;
    std::filesystem::path* target;
    bool required;
  };
  for (const PathKey& p : {PathKey{"persons", &config.persons, true},
                           PathKey{"geo", &config.spec_paths.geography, true},
                           PathKey{"iterations", &config.spec_paths.iterations, true},
                           PathKey{"levels", &config.spec_paths.levels, true},
                           PathKey{"total_only", &config.spec_paths.total_only, true},
                           PathKey{"exclusions", &config.spec_paths.exclusions, false},
                           PathKey{"coterminous", &config.coterminous, false},
                           PathKey{"output_dir", &config.output_dir, true}}) {
    if (!p.required && !kv.Has(p.key)) continue;
    auto path = kv.GetPath(p.key);
    if (!path.ok()) return path.status();
    *p.target = *path;
  }
  if (kv.Has("privacy_definition")) {
    auto def = ParsePrivacyDefinition(*kv.Get("privacy_definition"));
    if (!def.ok()) return def.status();
    config.privacy_definition = *def;
  }
  config.mechanism = DefaultMechanism(config.privacy_definition);
  if (kv.Has("mechanism")) {
    auto mechanism = ParseMechanismKind(*kv.Get("mechanism"));
    if (!mechanism.ok()) return mechanism.status();
    if (*mechanism != config.mechanism) {
      return absl::InvalidArgumentError(absl::StrCat(
          "mechanism ", MechanismKindName(*mechanism), " does not satisfy ",
          PrivacyDefinitionName(config.privacy_definition)));
    }
  }
  if (kv.Has("gamma")) {
    auto gamma = kv.GetRational("gamma");
    if (!gamma.ok()) return gamma.status();
    config.gamma = *gamma;
  }
  auto thresholds = kv.GetString("thresholds");
  if (!thresholds.ok()) return thresholds.status();
  auto parsed = ParseThresholds(*thresholds);
  if (!parsed.ok()) return parsed.status();
  config.thresholds = *parsed;
  for (const auto& [level, text] : kv.WithPrefix("thresholds.")) {
    auto t = ParseThresholds(text);
    if (!t.ok()) return t.status();
    config.level_thresholds.emplace(level, *t);
  }
  // Validates gamma and thresholds together.
  if (auto adaptive = AdaptiveConfig::Create(config.gamma, config.thresholds,
                                             config.mechanism,
                                             config.level_thresholds);
      !adaptive.ok()) {
    return adaptive.status();
  }
  if (kv.Has("suppression_p")) {
    auto p = kv.GetDouble("suppression_p");
    if (!p.ok()) return p.status();
    if (!(*p > 0 && *p < 1)) {
      return absl::InvalidArgumentError("suppression_p must be in (0, 1)");
    }
    config.suppression_p = *p;
  }
  if (kv.Has("seed")) {
    auto seed = kv.GetInt("seed");
    if (!seed.ok()) return seed.status();
    config.seed = static_cast<uint64_t>(*seed);
  }
  if (kv.Has("region")) {
    auto region = ParseRegion(*kv.Get("region"));
    if (!region.ok()) return region.status();
    config.region = *region;
  }
  if (kv.Has("race_cap")) {
    auto cap = kv.GetInt("race_cap");
    if (!cap.ok()) return cap.status();
    if (*cap < 1 || *cap > kMaxRaceCodes) {
      return absl::InvalidArgumentError(
          absl::StrCat("race_cap must be in [1, ", kMaxRaceCodes, "]"));
    }
    config.race_cap = static_cast<int>(*cap);
  }
  if (kv.Has("pr_state_code")) config.pr_state = *kv.Get("pr_state_code");
  if (kv.Has("threads")) {
    auto threads = kv.GetInt("threads");
    if (!threads.ok()) return threads.status();
    if (*threads < 1 || *threads > 256) {
      return absl::InvalidArgumentError("threads must be in [1, 256]");
    }
    config.threads = static_cast<int>(*threads);
  }
  return config;
}

absl::StatusOr<LoadedInputs> LoadAndValidate(const RunConfig& config) {
  LoadedInputs inputs;
  auto spec = LoadSpecFiles(config.spec_paths, inputs.report);
  if (!spec.ok()) return spec.status();
  inputs.spec = *std::move(spec);
  inputs.spec.race_cap = config.race_cap;
  auto persons = LoadPersons(config.persons, inputs.report);
  if (!persons.ok()) return persons.status();
  inputs.persons = *std::move(persons);
  if (!inputs.report.ok()) return inputs.report.ToStatus();

  auto universe = Universe::Build(inputs.spec);
  if (!universe.ok()) return universe.status();
  inputs.report.Merge(ValidateInputs(inputs.persons, *universe));
  if (!config.coterminous.empty()) {
    std::ifstream in(config.coterminous, std::ios::binary);
    if (!in) {
      return absl::NotFoundError(absl::StrCat(
          "cannot open '", config.coterminous.string(), "'"));
    }
    inputs.coterminous = ParseCoterminous(
        in, config.coterminous.filename().string(), inputs.report);
    ValidateCoterminous(inputs.coterminous, *universe, inputs.report);
  }
  return inputs;
}

absl::StatusOr<RegionResult> RunRegion(const RunConfig& config,
                                       const LoadedInputs& inputs,
                                       Region region) {
  auto universe = Universe::Build(
      RestrictToRegion(inputs.spec, region, config.pr_state));
  if (!universe.ok()) return universe.status();

  std::vector<PersonRecord> records;
  for (const PersonRecord& r : inputs.persons.records) {
    if (universe->HasBlock(r.block_id)) records.push_back(r);
  }

  std::vector<LevelAllocation> allocations;
  for (const LevelSpec& level : universe->spec().levels) {
    allocations.push_back({level.level_id, level.budget});
  }
  auto plan = LevelBudgetPlan::Create(allocations, config.gamma,
                                      config.privacy_definition);
  if (!plan.ok()) return plan.status();
  Ledger ledger(*std::move(plan));

  auto adaptive = AdaptiveConfig::Create(config.gamma, config.thresholds,
                                         config.mechanism,
                                         config.level_thresholds);
  if (!adaptive.ok()) return adaptive.status();
  std::unique_ptr<CountMechanism> mechanism = MakeMechanism(config.mechanism);

  auto noisy = RunTabulation(records, *universe, *adaptive, *mechanism, ledger,
                             TabulationOptions{config.seed, config.threads});
  if (!noisy.ok()) return noisy.status();

  std::vector<PublishedTable> tables = PublishAll(*noisy);
  ledger.RecordPostprocess("attach_marginals");

  std::map<std::string, int64_t, std::less<>> thresholds;
  for (size_t i = 0; i < universe->level_count(); ++i) {
    const LevelSpec& level = universe->level(i);
    if (!IsSubState(level.geo_level)) continue;
    auto t = DeriveThreshold(level.budget, config.gamma,
                             universe->StabilityOf(i), config.suppression_p,
                             config.privacy_definition);
    if (!t.ok()) return t.status();
    thresholds.emplace(level.level_id, *t);
  }
  RegionResult result;
  result.region = region;
  result.suppression_log = Suppress(tables, thresholds);
  ledger.RecordPostprocess("suppress");
  if (!inputs.coterminous.sets.empty()) {
    result.coterminous_overwrites =
        CoterminousFixup(tables, inputs.coterminous);
    ledger.RecordPostprocess("coterminous_fixup");
  }
  ledger.Close();

  std::stable_sort(tables.begin(), tables.end(),
                   [](const PublishedTable& a, const PublishedTable& b) {
                     return a.group < b.group;
                   });
  for (const PublishedTable& table : tables) {
    if (table.suppressed) continue;
    for (const PublishedCell& cell : table.cells) {
      result.rows.push_back(OutputRow{region, table.group.geo_level,
                                      table.group.entity_id,
                                      table.group.iteration_id,
                                      std::string(TableIdFor(table.tier)),
                                      cell.key, cell.count});
    }
  }

  result.spent_unbounded = ledger.TotalSpent().value();
  result.spent_bounded = BoundedReport(ledger.TotalSpent())->value();
  result.accounting =
      ledger.Report(absl::StrCat("privacy accounting: ", RegionName(region)));
  absl::StrAppend(&result.accounting, "\n## suppression thresholds (p = ",
                  config.suppression_p, ")\n");
  for (const auto& [level, t] : thresholds) {
    absl::StrAppend(&result.accounting, level, ": ", t, "\n");
  }
  return result;
}

std::string FormatRows(const std::vector<OutputRow>& rows) {
  std::string out =
      "region,geo_level,entity_id,iteration_id,table_id,cell_key,count\n";
  for (const OutputRow& r : rows) {
    absl::StrAppend(&out, RegionName(r.region), ",", GeoLevelName(r.geo_level),
                    ",", CsvField(r.entity_id), ",", CsvField(r.iteration_id),
                    ",", r.table_id, ",", CsvField(r.cell_key), ",", r.count,
                    "\n");
  }
  return out;
}

absl::Status WriteRegionOutputs(const RegionResult& result,
                                const std::filesystem::path& output_dir) {
  const std::string region(RegionName(result.region));
  const std::filesystem::path dir = output_dir / region;
  for (absl::string_view table_id : {"T01001", "T02001", "T02002", "T02003"}) {
    std::vector<OutputRow> rows;
    std::copy_if(result.rows.begin(), result.rows.end(),
                 std::back_inserter(rows),
                 [&](const OutputRow& r) { return r.table_id == table_id; });
    if (auto s = WriteFile(dir / absl::StrCat(table_id, ".csv"),
                           FormatRows(rows));
        !s.ok()) {
      return s;
    }
  }
  if (auto s = WriteFile(dir / "all_tables.csv", FormatRows(result.rows));
      !s.ok()) {
    return s;
  }
  if (auto s = WriteFile(dir / "accounting.txt", result.accounting); !s.ok()) {
    return s;
  }
  return WriteFile(output_dir / "private" / region / "suppression_log.csv",
                   FormatLog(result.suppression_log));
}

absl::StatusOr<std::vector<RegionResult>> RunPipeline(const RunConfig& config) {
  auto inputs = LoadAndValidate(config);
  if (!inputs.ok()) return inputs.status();
  if (!inputs->report.ok()) return inputs->report.ToStatus();
  std::vector<Region> regions = {Region::kUS, Region::kPR};
  if (config.region.has_value()) regions = {*config.region};
  std::vector<RegionResult> results;
  for (Region region : regions) {
    auto result = RunRegion(config, *inputs, region);
    if (!result.ok()) return result.status();
    if (auto s = WriteRegionOutputs(*result, config.output_dir); !s.ok()) {
      return s;
    }
    results.push_back(*std::move(result));
  }
  return results;
}

std::vector<PersonRecord> GenerateSynthetic(const Universe& universe,
                                            int64_t count, uint64_t seed) {
  std::vector<PersonRecord> out;
  const std::vector<BlockGeography>& blocks = universe.spec().geography;
  const std::vector<std::string> races(universe.race_codes().begin(),
                                       universe.race_codes().end());
  std::vector<std::string> ethnicities(universe.ethnicity_codes().begin(),
                                       universe.ethnicity_codes().end());
  if (ethnicities.empty()) ethnicities.push_back("NA");
  if (blocks.empty() || races.empty() || count <= 0) return out;
  const size_t max_races =
      std::min<size_t>(races.size(), universe.spec().race_cap);
  RandomSource rng(seed, kSyntheticStream);
  std::vector<size_t> order(races.size());
  out.reserve(count);
  for (int64_t i = 0; i < count; ++i) {
    PersonRecord r;
    r.block_id = blocks[rng.UniformBelow(blocks.size())].block_id;
    const size_t k = 1 + rng.UniformBelow(max_races);
    // Partial Fisher-Yates for k distinct codes.
    std::iota(order.begin(), order.end(), 0);
    for (size_t j = 0; j < k; ++j) {
      std::swap(order[j], order[j + rng.UniformBelow(order.size() - j)]);
      r.race_codes.push_back(races[order[j]]);
    }
    std::sort(r.race_codes.begin(), r.race_codes.end());
    r.ethnicity_code = ethnicities[rng.UniformBelow(ethnicities.size())];
    r.sex = rng.FairCoin() ? Sex::kFemale : Sex::kMale;
    r.age = static_cast<int32_t>(rng.UniformBelow(kSyntheticMaxAge + 1));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dptab
