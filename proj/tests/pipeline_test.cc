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

#include <fstream>
#include <set>
#include <sstream>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "dptab/config.h"
#include "gtest/gtest.h"

namespace dptab {
namespace {

const std::filesystem::path kData(DPTAB_TEST_DATA_DIR);

RunConfig LoadConfig(const std::filesystem::path& file,
                     const std::string& out_name) {
  auto kv = KeyValueConfig::Load(file);
  EXPECT_TRUE(kv.ok()) << kv.status();
  auto config = ParseRunConfig(*kv);
  EXPECT_TRUE(config.ok()) << config.status();
  config->output_dir = std::filesystem::path(::testing::TempDir()) / out_name;
  std::filesystem::remove_all(config->output_dir);
  return *config;
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

TEST(ExitCodeTest, Mapping) {
  EXPECT_EQ(ExitCodeFor(absl::OkStatus()), kExitOk);
  EXPECT_EQ(ExitCodeFor(absl::InvalidArgumentError("x")), kExitValidation);
  EXPECT_EQ(ExitCodeFor(absl::FailedPreconditionError("x")), kExitValidation);
  EXPECT_EQ(ExitCodeFor(absl::ResourceExhaustedError("x")), kExitBudget);
  EXPECT_EQ(ExitCodeFor(absl::NotFoundError("x")), kExitIo);
  EXPECT_EQ(ExitCodeFor(absl::InternalError("x")), kExitIo);
}

TEST(RunConfigTest, RejectsBadKeys) {
  for (const char* text :
       {"thresholds = 1,2,3\ncolour = red\n", "gamma = 0.1\n",
        "thresholds = 3,2,1\n", "thresholds = 1,2,3\ngamma = 1.5\n",
        "thresholds = 1,2,3\nprivacy_definition = pureDP\n"
        "mechanism = discrete_gaussian\n",
        "thresholds = 1,2,3\nsuppression_p = 1\n",
        "thresholds = 1,2,3\nrace_cap = 9\n"}) {
    auto kv = KeyValueConfig::Parse(
        absl::StrCat("persons = p\ngeo = g\niterations = i\nlevels = l\n"
                     "total_only = t\noutput_dir = o\n",
                     text),
        "run.cfg");
    ASSERT_TRUE(kv.ok()) << text;
    auto config = ParseRunConfig(*kv);
    EXPECT_EQ(config.status().code(), absl::StatusCode::kInvalidArgument)
        << text;
  }
}

TEST(GoldenRunTest, SpendsTheWholePlanInEachRegion) {
  const RunConfig config = LoadConfig(kData / "golden" / "run.cfg", "golden1");
  auto results = RunPipeline(config);
  ASSERT_TRUE(results.ok()) << results.status();
  ASSERT_EQ(results->size(), 2u);
  for (const RegionResult& r : *results) {
    EXPECT_EQ(r.spent_unbounded, Rational(618, 125));
    EXPECT_EQ(r.spent_bounded, Rational(1236, 125));
    EXPECT_TRUE(absl::StrContains(r.accounting, "4.944"));
    EXPECT_FALSE(r.rows.empty());
  }
  for (const char* name : {"T01001.csv", "T02001.csv", "T02002.csv",
                           "T02003.csv", "all_tables.csv", "accounting.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(config.output_dir / "US" / name))
        << name;
    EXPECT_TRUE(std::filesystem::exists(config.output_dir / "PR" / name))
        << name;
  }
  EXPECT_TRUE(std::filesystem::exists(config.output_dir / "private" / "US" /
                                      "suppression_log.csv"));
}

TEST(GoldenRunTest, ByteIdenticalAcrossRunsAndThreadCounts) {
  RunConfig a = LoadConfig(kData / "golden" / "run.cfg", "golden_a");
  RunConfig b = LoadConfig(kData / "golden" / "run.cfg", "golden_b");
  b.threads = 4;
  ASSERT_TRUE(RunPipeline(a).ok());
  ASSERT_TRUE(RunPipeline(b).ok());
  for (const char* region : {"US", "PR"}) {
    const std::string x = Slurp(a.output_dir / region / "all_tables.csv");
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, Slurp(b.output_dir / region / "all_tables.csv")) << region;
    EXPECT_EQ(Slurp(a.output_dir / region / "accounting.txt"),
              Slurp(b.output_dir / region / "accounting.txt"));
  }
}

TEST(GoldenRunTest, SeedChangesCounts) {
  RunConfig a = LoadConfig(kData / "golden" / "run.cfg", "seed_a");
  RunConfig b = LoadConfig(kData / "golden" / "run.cfg", "seed_b");
  b.seed = a.seed + 1;
  auto ra = RunPipeline(a);
  auto rb = RunPipeline(b);
  ASSERT_TRUE(ra.ok() && rb.ok());
  EXPECT_NE(FormatRows((*ra)[0].rows), FormatRows((*rb)[0].rows));
}

TEST(GoldenRunTest, RegionFilter) {
  RunConfig config = LoadConfig(kData / "golden" / "run.cfg", "golden_pr");
  config.region = Region::kPR;
  auto results = RunPipeline(config);
  ASSERT_TRUE(results.ok());
  ASSERT_EQ(results->size(), 1u);
  for (const OutputRow& row : (*results)[0].rows) {
    EXPECT_EQ(row.region, Region::kPR);
    if (row.geo_level == GeoLevel::kNation) EXPECT_EQ(row.entity_id, "PR");
    if (row.geo_level == GeoLevel::kState) EXPECT_EQ(row.entity_id, "72");
  }
  EXPECT_FALSE(std::filesystem::exists(config.output_dir / "US"));
}

TEST(GoldenRunTest, OutputsCarryNoInternalValues) {
  const RunConfig config = LoadConfig(kData / "golden" / "run.cfg", "golden2");
  ASSERT_TRUE(RunPipeline(config).ok());
  const std::string all = Slurp(config.output_dir / "US" / "all_tables.csv");
  EXPECT_TRUE(absl::StartsWith(
      all, "region,geo_level,entity_id,iteration_id,table_id,cell_key,count\n"));
  EXPECT_FALSE(absl::StrContains(all, "stage1"));
  EXPECT_FALSE(absl::StrContains(all, "suppress"));
  // Suppressed groups have no rows.
  auto loaded = LoadAndValidate(config);
  ASSERT_TRUE(loaded.ok());
  auto result = RunRegion(config, *loaded, Region::kUS);
  ASSERT_TRUE(result.ok());
  for (const SuppressionLogEntry& e : result->suppression_log) {
    EXPECT_LT(e.noisy_total, e.threshold);
    for (const OutputRow& row : result->rows) {
      EXPECT_FALSE(row.geo_level == e.group.geo_level &&
                   row.entity_id == e.group.entity_id &&
                   row.iteration_id == e.group.iteration_id);
    }
  }
}

TEST(GoldenRunTest, SortedRowsAndConsistentMarginals) {
  const RunConfig config = LoadConfig(kData / "golden" / "run.cfg", "golden3");
  auto loaded = LoadAndValidate(config);
  ASSERT_TRUE(loaded.ok());
  auto result = RunRegion(config, *loaded, Region::kUS);
  ASSERT_TRUE(result.ok());
  std::map<std::tuple<GeoLevel, std::string, std::string>,
           std::map<std::string, int64_t>>
      tables;
  for (const OutputRow& row : result->rows) {
    tables[{row.geo_level, row.entity_id, row.iteration_id}][row.cell_key] =
        row.count;
  }
  for (const auto& [key, cells] : tables) {
    if (cells.size() == 1) continue;
    int64_t male = 0, female = 0;
    for (const auto& [k, v] : cells) {
      if (absl::StartsWith(k, "Male:")) male += v;
      if (absl::StartsWith(k, "Female:")) female += v;
    }
    EXPECT_EQ(cells.at("Male"), male);
    EXPECT_EQ(cells.at("Female"), female);
    EXPECT_EQ(cells.at("Total"), male + female);
  }
}

TEST(PipelineErrorsTest, ZeroBudgetLevelIsAValidationError) {
  const std::filesystem::path dir =
      std::filesystem::path(::testing::TempDir()) / "zero_budget";
  std::filesystem::create_directories(dir);
  for (const char* f : {"geo.txt", "iterations.txt", "total_only.txt",
                        "persons.txt"}) {
    std::filesystem::copy_file(kData / "golden" / f, dir / f,
                               std::filesystem::copy_options::overwrite_existing);
  }
  std::ofstream(dir / "levels.txt")
      << "level_id|geo_level|iteration_level|rho\n"
         "nation_detailed|Nation|Detailed|0\n";
  std::ofstream(dir / "run.cfg")
      << "persons = persons.txt\ngeo = geo.txt\niterations = iterations.txt\n"
         "levels = levels.txt\ntotal_only = total_only.txt\noutput_dir = out\n"
         "thresholds = 5,20,60\n";
  RunConfig config = LoadConfig(dir / "run.cfg", "zero_budget_out");
  auto results = RunPipeline(config);
  EXPECT_EQ(ExitCodeFor(results.status()), kExitValidation);
  EXPECT_FALSE(std::filesystem::exists(config.output_dir / "US"));
}

TEST(PipelineErrorsTest, MissingPersonsIsIo) {
  RunConfig config = LoadConfig(kData / "golden" / "run.cfg", "missing");
  config.persons = kData / "golden" / "absent.txt";
  EXPECT_EQ(ExitCodeFor(RunPipeline(config).status()), kExitIo);
}

TEST(CoterminousRunTest, DcEntitiesPublishIdenticalTables) {
  const RunConfig config = LoadConfig(kData / "dc" / "run.cfg", "dc");
  auto loaded = LoadAndValidate(config);
  ASSERT_TRUE(loaded.ok()) << loaded.status();
  ASSERT_TRUE(loaded->report.ok()) << loaded->report.ToString();
  auto result = RunRegion(config, *loaded, Region::kUS);
  ASSERT_TRUE(result.ok()) << result.status();
  EXPECT_GT(result->coterminous_overwrites, 0u);
  std::map<std::string, std::map<std::string, std::string>> by_entity;
  for (const OutputRow& row : result->rows) {
    if (row.entity_id != "11" && row.entity_id != "11001" &&
        row.entity_id != "1150000") {
      continue;
    }
    absl::StrAppend(&by_entity[row.iteration_id][row.entity_id], row.table_id,
                    ",", row.cell_key, ",", row.count, "\n");
  }
  ASSERT_FALSE(by_entity.empty());
  for (const auto& [iteration, entities] : by_entity) {
    ASSERT_EQ(entities.size(), 3u) << iteration;
    EXPECT_EQ(entities.at("11"), entities.at("11001")) << iteration;
    EXPECT_EQ(entities.at("11"), entities.at("1150000")) << iteration;
  }
  EXPECT_TRUE(absl::StrContains(result->accounting, "coterminous_fixup"));
}

class SyntheticTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const RunConfig config = LoadConfig(kData / "golden" / "run.cfg", "synth");
    auto loaded = LoadAndValidate(config);
    ASSERT_TRUE(loaded.ok());
    auto universe = Universe::Build(loaded->spec);
    ASSERT_TRUE(universe.ok());
    universe_.emplace(*std::move(universe));
  }
  std::optional<Universe> universe_;
};

TEST_F(SyntheticTest, EmptyRequest) {
  EXPECT_TRUE(GenerateSynthetic(*universe_, 0, 1).empty());
}

TEST_F(SyntheticTest, LargeSampleValidatesAndRespectsStability) {
  const auto records = GenerateSynthetic(*universe_, 10000, 42);
  ASSERT_EQ(records.size(), 10000u);
  ParsedPersons persons{"synthetic", records,
                        std::vector<int64_t>(records.size(), 0)};
  const ValidationReport report = ValidateInputs(persons, *universe_);
  EXPECT_TRUE(report.ok()) << report.ToString();
  for (size_t level = 0; level < universe_->level_count(); ++level) {
    for (const PersonRecord& r : records) {
      ASSERT_LE(static_cast<int64_t>(universe_->MapToGroups(r, level).size()),
                universe_->StabilityOf(level));
    }
  }
  // Deterministic in the seed.
  const auto again = GenerateSynthetic(*universe_, 10000, 42);
  EXPECT_EQ(FormatPersons(again), FormatPersons(records));
}

}  // namespace
}  // namespace dptab
