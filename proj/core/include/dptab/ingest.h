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

// Reading and validating the pipe-delimited input files.
//
// All files are UTF-8 with a header row. Parsers never skip a malformed row:
// every problem becomes an issue in a ValidationReport carrying the file name
// and 1-based line number. Validation reports are for the curator only and are
// never written to public outputs.

#ifndef DPTAB_INGEST_H_
#define DPTAB_INGEST_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dptab/datamodel.h"

namespace dptab {

enum class IssueKind {
  kSchema,             // wrong header, wrong field count, blank row
  kBadValue,           // unparsable or out-of-domain field
  kDuplicate,          // repeated block, iteration, level or code
  kUnknownReference,   // spec row naming an undefined iteration or entity
  kUnknownBlock,       // person block absent from geography
  kUnknownCode,        // race/ethnicity code outside the configured domain
  kRaceMultiplicity,   // more race codes than allowed
  kInvalidLevel,       // e.g. (AIANNH, Regional), TotalOnly below State
  kStability,          // declared stability below the structural bound
  kAgeAboveTypicalRange,  // warning only
};

absl::string_view IssueKindName(IssueKind kind);

struct ValidationIssue {
  IssueKind kind = IssueKind::kSchema;
  bool warning = false;
  std::string file;
  int64_t line = 0;  // 0 when not tied to a row
  std::string message;
};

class ValidationReport {
 public:
  void AddError(IssueKind kind, absl::string_view file, int64_t line,
                std::string message);
  void AddWarning(IssueKind kind, absl::string_view file, int64_t line,
                  std::string message);
  void Merge(const ValidationReport& other);

  bool ok() const { return error_count_ == 0; }
  size_t error_count() const { return error_count_; }
  size_t warning_count() const { return issues_.size() - error_count_; }
  const std::vector<ValidationIssue>& issues() const { return issues_; }
  bool Has(IssueKind kind) const;

  std::string ToString() const;

  // InvalidArgument summarizing the first errors, or OK.
  absl::Status ToStatus() const;

 private:
  std::vector<ValidationIssue> issues_;
  size_t error_count_ = 0;
};

struct ParsedPersons {
  std::string file;
  std::vector<PersonRecord> records;
  std::vector<int64_t> lines;  // source line of each record
};

std::vector<BlockGeography> ParseGeography(std::istream& in,
                                           absl::string_view file,
                                           ValidationReport& report);
std::vector<CharacteristicIteration> ParseIterations(std::istream& in,
                                                     absl::string_view file,
                                                     ValidationReport& report);
std::vector<LevelSpec> ParseLevels(std::istream& in, absl::string_view file,
                                   ValidationReport& report);
// total_only.txt and iteration_exclusions.txt share this shape.
std::vector<IterationAtGeoLevel> ParseIterationGeoPairs(
    std::istream& in, absl::string_view file, ValidationReport& report);
ParsedPersons ParsePersons(std::istream& in, absl::string_view file,
                           ValidationReport& report);

// Structural checks on the public files: duplicates, dangling references,
// (AIANNH, Regional), TotalOnly outside Nation/State, ethnicity iterations
// that are not Alone, race_cap outside [1, 8].
void ValidateSpecFiles(const SpecFiles& spec, ValidationReport& report);

// Checks every person record against the universe: block referential
// integrity, code-domain membership, race multiplicity, duplicate codes.
// Ages above 115 produce warnings only.
ValidationReport ValidateInputs(const ParsedPersons& persons,
                                const Universe& universe);

struct SpecPaths {
  std::filesystem::path geography;
  std::filesystem::path iterations;
  std::filesystem::path levels;
  std::filesystem::path total_only;
  std::filesystem::path exclusions;  // optional; empty path means none
};

// Reads and parses the spec files. I/O failures are returned as NotFound;
// content problems are accumulated into `report`.
absl::StatusOr<SpecFiles> LoadSpecFiles(const SpecPaths& paths,
                                        ValidationReport& report);
absl::StatusOr<ParsedPersons> LoadPersons(const std::filesystem::path& path,
                                          ValidationReport& report);

// persons.txt rendering, header included.
std::string FormatPersons(std::span<const PersonRecord> records);

}  // namespace dptab

#endif  // DPTAB_INGEST_H_
