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

// End-to-end runs: configuration, validation, tabulation, postprocessing and
// output writing, executed independently for the US and PR regions. Also
// synthetic person-file generation.

#ifndef DPTAB_PIPELINE_H_
#define DPTAB_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dptab/accountant.h"
#include "dptab/config.h"
#include "dptab/datamodel.h"
#include "dptab/engine.h"
#include "dptab/ingest.h"
#include "dptab/postprocess.h"

namespace dptab {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBudget = 3;
inline constexpr int kExitIo = 4;

// InvalidArgument -> validation, ResourceExhausted -> budget, everything
// else (NotFound, Internal, ...) -> I/O.
int ExitCodeFor(const absl::Status& status);

struct RunConfig {
  SpecPaths spec_paths;
  std::filesystem::path persons;
  std::filesystem::path coterminous;  // optional
  std::filesystem::path output_dir;
  PrivacyDefinition privacy_definition = PrivacyDefinition::kZcdp;
  MechanismKind mechanism = MechanismKind::kDiscreteGaussian;
  Rational gamma = Rational(1, 10);
  Thresholds thresholds;
  std::map<std::string, Thresholds, std::less<>> level_thresholds;
  double suppression_p = 0.9999;
  uint64_t seed = 0;
  std::optional<Region> region;  // nullopt runs both regions
  int race_cap = kMaxRaceCodes;
  std::string pr_state = "72";
  int threads = 1;
};

// Keys: persons, geo, iterations, levels, total_only, exclusions,
// coterminous, output_dir, privacy_definition, mechanism, gamma, thresholds,
// thresholds.<level_id>, suppression_p, seed, region, race_cap,
// pr_state_code, threads. Paths are relative to the config file.
absl::StatusOr<RunConfig> ParseRunConfig(const KeyValueConfig& config);

// Public specification plus persons, loaded and validated.
struct LoadedInputs {
  SpecFiles spec;
  ParsedPersons persons;
  CoterminousSpec coterminous;
  ValidationReport report;
};

// Reads every input and runs all validation. Validation problems come back
// in `report`; I/O failures as a status.
absl::StatusOr<LoadedInputs> LoadAndValidate(const RunConfig& config);

struct OutputRow {
  Region region = Region::kUS;
  GeoLevel geo_level = GeoLevel::kNation;
  std::string entity_id;
  std::string iteration_id;
  std::string table_id;
  std::string cell_key;
  int64_t count = 0;
};

struct RegionResult {
  Region region = Region::kUS;
  std::vector<OutputRow> rows;  // sorted for output
  std::vector<SuppressionLogEntry> suppression_log;
  std::string accounting;
  Rational spent_unbounded;
  Rational spent_bounded;
  size_t coterminous_overwrites = 0;
};

// One independent pass over a region's records with its own ledger. Does not
// write files.
absl::StatusOr<RegionResult> RunRegion(const RunConfig& config,
                                       const LoadedInputs& inputs,
                                       Region region);

// Writes <output_dir>/<region>/{T01001,T02001,T02002,T02003,all_tables}.csv
// and accounting.txt, plus the curator-only
// <output_dir>/private/<region>/suppression_log.csv.
absl::Status WriteRegionOutputs(const RegionResult& result,
                                const std::filesystem::path& output_dir);

// Validates, then runs and writes each requested region.
absl::StatusOr<std::vector<RegionResult>> RunPipeline(const RunConfig& config);

// CSV text for rows, header included.
std::string FormatRows(const std::vector<OutputRow>& rows);

// Uniformly random records over the configured blocks and code domains with
// 1 to race_cap distinct race codes each. Deterministic in `seed`.
std::vector<PersonRecord> GenerateSynthetic(const Universe& universe,
                                            int64_t count, uint64_t seed);

}  // namespace dptab

#endif  // DPTAB_PIPELINE_H_
