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

#include "dptab/ingest.h"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace dptab {
namespace {

constexpr int32_t kTypicalMaxAge = 115;
constexpr size_t kStatusIssueLimit = 10;

// Iterates data rows of a pipe-delimited file after checking its header.
// `expected` lists required columns; `optional` columns may follow them.
class DelimitedReader {
 public:
  DelimitedReader(std::istream& in, absl::string_view file,
                  ValidationReport& report, std::vector<std::string> expected,
                  std::vector<std::string> optional = {})
      : in_(in), file_(file), report_(report) {
    std::string header;
    if (!std::getline(in_, header)) {
      report_.AddError(IssueKind::kSchema, file_, 1, "missing header row");
      ok_ = false;
      return;
    }
    line_ = 1;
    std::vector<std::string> columns = Split(header);
    const size_t required = expected.size();
    std::vector<std::string> allowed = expected;
    allowed.insert(allowed.end(), optional.begin(), optional.end());
    bool match = columns.size() >= required && columns.size() <= allowed.size();
    for (size_t i = 0; match && i < columns.size(); ++i) {
      match = absl::AsciiStrToLower(columns[i]) == allowed[i];
    }
    if (!match) {
      report_.AddError(IssueKind::kSchema, file_, 1,
                       absl::StrCat("header '", header, "' does not match '",
                                    absl::StrJoin(expected, "|"), "'"));
      ok_ = false;
      return;
    }
    width_ = columns.size();
  }

  // Next well-formed row; malformed rows are reported and skipped over by the
  // reader (the report then fails validation).
  bool Next(std::vector<std::string>& fields) {
    if (!ok_) return false;
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      if (absl::StripAsciiWhitespace(raw).empty()) {
        report_.AddError(IssueKind::kSchema, file_, line_, "blank row");
        continue;
      }
      fields = Split(raw);
      if (fields.size() != width_) {
        report_.AddError(IssueKind::kSchema, file_, line_,
                         absl::StrCat("expected ", width_, " fields, found ",
                                      fields.size()));
        continue;
      }
      return true;
    }
    return false;
  }

  int64_t line() const { return line_; }
  size_t width() const { return width_; }
  absl::string_view file() const { return file_; }
  ValidationReport& report() { return report_; }

 private:
  static std::vector<std::string> Split(absl::string_view line) {
    std::vector<std::string> out;
    for (absl::string_view part : absl::StrSplit(line, '|')) {
      out.emplace_back(absl::StripAsciiWhitespace(part));
    }
    return out;
  }

  std::istream& in_;
  std::string file_;
  ValidationReport& report_;
  int64_t line_ = 0;
  size_t width_ = 0;
  bool ok_ = true;
};

std::vector<std::string> SplitCodes(absl::string_view field) {
  std::vector<std::string> out;
  for (absl::string_view part : absl::StrSplit(field, ',')) {
    out.emplace_back(absl::StripAsciiWhitespace(part));
  }
  return out;
}

template <typename T>
bool Assign(absl::StatusOr<T> parsed, T& out, DelimitedReader& reader) {
  if (!parsed.ok()) {
    reader.report().AddError(IssueKind::kBadValue, reader.file(), reader.line(),
                             std::string(parsed.status().message()));
    return false;
  }
  out = *std::move(parsed);
  return true;
}

absl::StatusOr<std::string> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open '", path.string(), "'"));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

absl::string_view IssueKindName(IssueKind kind) {
  switch (kind) {
    case IssueKind::kSchema:
      return "schema";
    case IssueKind::kBadValue:
      return "bad value";
    case IssueKind::kDuplicate:
      return "duplicate";
    case IssueKind::kUnknownReference:
      return "unknown reference";
    case IssueKind::kUnknownBlock:
      return "unknown block";
    case IssueKind::kUnknownCode:
      return "unknown code";
    case IssueKind::kRaceMultiplicity:
      return "race multiplicity exceeded";
    case IssueKind::kInvalidLevel:
      return "invalid level";
    case IssueKind::kStability:
      return "stability";
    case IssueKind::kAgeAboveTypicalRange:
      return "age above typical range";
  }
  return "?";
}

void ValidationReport::AddError(IssueKind kind, absl::string_view file,
                                int64_t line, std::string message) {
  issues_.push_back(
      ValidationIssue{kind, false, std::string(file), line, std::move(message)});
  ++error_count_;
}

void ValidationReport::AddWarning(IssueKind kind, absl::string_view file,
                                  int64_t line, std::string message) {
  issues_.push_back(
      ValidationIssue{kind, true, std::string(file), line, std::move(message)});
}

void ValidationReport::Merge(const ValidationReport& other) {
  issues_.insert(issues_.end(), other.issues_.begin(), other.issues_.end());
  error_count_ += other.error_count_;
}

bool ValidationReport::Has(IssueKind kind) const {
  for (const ValidationIssue& issue : issues_) {
    if (issue.kind == kind) return true;
  }
  return false;
}

std::string ValidationReport::ToString() const {
  std::string out;
  for (const ValidationIssue& issue : issues_) {
    absl::StrAppend(&out, issue.warning ? "warning" : "error", ": ",
                    issue.file.empty() ? "-" : issue.file);
    if (issue.line > 0) absl::StrAppend(&out, ":", issue.line);
    absl::StrAppend(&out, ": [", IssueKindName(issue.kind), "] ",
                    issue.message, "\n");
  }
  absl::StrAppend(&out, error_count_, " error(s), ", warning_count(),
                  " warning(s)\n");
  return out;
}

absl::Status ValidationReport::ToStatus() const {
  if (ok()) return absl::OkStatus();
  std::string message = absl::StrCat("input validation failed with ",
                                     error_count_, " error(s)");
  size_t shown = 0;
  for (const ValidationIssue& issue : issues_) {
    if (issue.warning) continue;
    if (shown++ == kStatusIssueLimit) {
      absl::StrAppend(&message, "; ...");
      break;
    }
    absl::StrAppend(&message, "; ", issue.file, issue.line > 0 ? ":" : "",
                    issue.line > 0 ? absl::StrCat(issue.line) : "", " [",
                    IssueKindName(issue.kind), "] ", issue.message);
  }
  return absl::InvalidArgumentError(message);
}

std::vector<BlockGeography> ParseGeography(std::istream& in,
                                           absl::string_view file,
                                           ValidationReport& report) {
  DelimitedReader reader(in, file, report,
                         {"block", "state", "county", "tract", "place", "aiannh"});
  std::vector<BlockGeography> out;
  std::vector<std::string> f;
  std::set<std::string> seen;
  while (reader.Next(f)) {
    if (f[0].empty() || f[1].empty() || f[2].empty() || f[3].empty()) {
      report.AddError(IssueKind::kBadValue, file, reader.line(),
                      "block, state, county and tract are required");
      continue;
    }
    if (!seen.insert(f[0]).second) {
      report.AddError(IssueKind::kDuplicate, file, reader.line(),
                      absl::StrCat("block '", f[0], "' listed twice"));
      continue;
    }
    out.push_back(BlockGeography{f[0], f[1], f[2], f[3], f[4], f[5]});
  }
  return out;
}

std::vector<CharacteristicIteration> ParseIterations(std::istream& in,
                                                     absl::string_view file,
                                                     ValidationReport& report) {
  DelimitedReader reader(in, file, report,
                         {"iteration_id", "level", "alone_flag", "codes"},
                         {"kind"});
  std::vector<CharacteristicIteration> out;
  std::vector<std::string> f;
  while (reader.Next(f)) {
    CharacteristicIteration it;
    it.id = f[0];
    bool ok = !it.id.empty();
    if (!ok) report.AddError(IssueKind::kBadValue, file, reader.line(), "empty iteration id");
    ok = Assign(ParseIterationLevel(f[1]), it.level, reader) && ok;
    ok = Assign(ParseAloneFlag(f[2]), it.alone, reader) && ok;
    if (reader.width() > 4) ok = Assign(ParseCodeKind(f[4]), it.kind, reader) && ok;
    for (std::string& code : SplitCodes(f[3])) {
      if (code.empty()) {
        report.AddError(IssueKind::kBadValue, file, reader.line(),
                        absl::StrCat("empty code in iteration '", it.id, "'"));
        ok = false;
        continue;
      }
      if (!it.codes.insert(std::move(code)).second) {
        report.AddError(IssueKind::kDuplicate, file, reader.line(),
                        absl::StrCat("code repeated in iteration '", it.id, "'"));
        ok = false;
      }
    }
    if (ok) out.push_back(std::move(it));
  }
  return out;
}

std::vector<LevelSpec> ParseLevels(std::istream& in, absl::string_view file,
                                   ValidationReport& report) {
  DelimitedReader reader(in, file, report,
                         {"level_id", "geo_level", "iteration_level", "rho"},
                         {"stability"});
  std::vector<LevelSpec> out;
  std::vector<std::string> f;
  while (reader.Next(f)) {
    LevelSpec level;
    level.level_id = f[0];
    bool ok = !level.level_id.empty();
    if (!ok) report.AddError(IssueKind::kBadValue, file, reader.line(), "empty level id");
    ok = Assign(ParseGeoLevel(f[1]), level.geo_level, reader) && ok;
    ok = Assign(ParseIterationLevel(f[2]), level.iteration_level, reader) && ok;
    ok = Assign(ParseRational(f[3]), level.budget, reader) && ok;
    if (reader.width() > 4 && !f[4].empty()) {
      int64_t stability = 0;
      if (!absl::SimpleAtoi(f[4], &stability) || stability < 1) {
        report.AddError(IssueKind::kBadValue, file, reader.line(),
                        absl::StrCat("stability must be a positive integer, got '",
                                     f[4], "'"));
        ok = false;
      } else {
        level.stability = stability;
      }
    }
    if (ok) out.push_back(std::move(level));
  }
  return out;
}

std::vector<IterationAtGeoLevel> ParseIterationGeoPairs(
    std::istream& in, absl::string_view file, ValidationReport& report) {
  DelimitedReader reader(in, file, report, {"iteration_id", "geo_level"});
  std::vector<IterationAtGeoLevel> out;
  std::vector<std::string> f;
  while (reader.Next(f)) {
    IterationAtGeoLevel pair;
    pair.iteration_id = f[0];
    if (Assign(ParseGeoLevel(f[1]), pair.geo_level, reader)) out.push_back(pair);
  }
  return out;
}

ParsedPersons ParsePersons(std::istream& in, absl::string_view file,
                           ValidationReport& report) {
  DelimitedReader reader(in, file, report,
                         {"block", "race_codes", "ethnicity", "sex", "age"});
  ParsedPersons out;
  out.file = std::string(file);
  std::vector<std::string> f;
  while (reader.Next(f)) {
    PersonRecord r;
    r.block_id = f[0];
    bool ok = true;
    if (r.block_id.empty()) {
      report.AddError(IssueKind::kBadValue, file, reader.line(), "empty block");
      ok = false;
    }
    if (!f[1].empty()) r.race_codes = SplitCodes(f[1]);
    r.ethnicity_code = f[2];
    ok = Assign(ParseSex(f[3]), r.sex, reader) && ok;
    if (!absl::SimpleAtoi(f[4], &r.age) || r.age < 0) {
      report.AddError(IssueKind::kBadValue, file, reader.line(),
                      absl::StrCat("age must be a nonnegative integer, got '",
                                   f[4], "'"));
      ok = false;
    }
    if (ok) {
      out.records.push_back(std::move(r));
      out.lines.push_back(reader.line());
    }
  }
  return out;
}

void ValidateSpecFiles(const SpecFiles& spec, ValidationReport& report) {
  if (spec.race_cap < 1 || spec.race_cap > kMaxRaceCodes) {
    report.AddError(IssueKind::kBadValue, "config", 0,
                    absl::StrCat("race_cap must be in [1, ", kMaxRaceCodes,
                                 "], got ", spec.race_cap));
  }
  std::map<std::string, const CharacteristicIteration*> iterations;
  for (const CharacteristicIteration& it : spec.iterations) {
    if (!iterations.emplace(it.id, &it).second) {
      report.AddError(IssueKind::kDuplicate, "iterations", 0,
                      absl::StrCat("iteration '", it.id, "' defined twice"));
    }
    if (it.codes.empty()) {
      report.AddError(IssueKind::kBadValue, "iterations", 0,
                      absl::StrCat("iteration '", it.id, "' has no codes"));
    }
    if (it.kind == CodeKind::kEthnicity && it.alone != AloneFlag::kAlone) {
      report.AddError(IssueKind::kBadValue, "iterations", 0,
                      absl::StrCat("ethnicity iteration '", it.id,
                                   "' must be Alone"));
    }
  }
  std::set<std::string> level_ids;
  std::set<std::pair<GeoLevel, IterationLevel>> level_pairs;
  for (const LevelSpec& level : spec.levels) {
    if (!level_ids.insert(level.level_id).second) {
      report.AddError(IssueKind::kDuplicate, "levels", 0,
                      absl::StrCat("level id '", level.level_id, "' repeated"));
    }
    if (!level_pairs.insert({level.geo_level, level.iteration_level}).second) {
      report.AddError(
          IssueKind::kDuplicate, "levels", 0,
          absl::StrCat("(", GeoLevelName(level.geo_level), ", ",
                       IterationLevelName(level.iteration_level),
                       ") defined by more than one level"));
    }
    if (level.geo_level == GeoLevel::kAiannh &&
        level.iteration_level == IterationLevel::kRegional) {
      report.AddError(IssueKind::kInvalidLevel, "levels", 0,
                      absl::StrCat("level '", level.level_id,
                                   "': (AIANNH, Regional) is not tabulated"));
    }
    if (level.budget <= 0) {
      report.AddError(IssueKind::kBadValue, "levels", 0,
                      absl::StrCat("level '", level.level_id,
                                   "' must have a positive budget, got ",
                                   FormatExact(level.budget)));
    }
  }
  std::set<IterationAtGeoLevel> seen_total_only;
  for (const IterationAtGeoLevel& pair : spec.total_only) {
    if (!iterations.contains(pair.iteration_id)) {
      report.AddError(IssueKind::kUnknownReference, "total_only", 0,
                      absl::StrCat("unknown iteration '", pair.iteration_id, "'"));
    }
    if (IsSubState(pair.geo_level)) {
      report.AddError(IssueKind::kInvalidLevel, "total_only", 0,
                      absl::StrCat("TotalOnly iteration '", pair.iteration_id,
                                   "' at ", GeoLevelName(pair.geo_level),
                                   "; only Nation and State are allowed"));
    }
    if (!seen_total_only.insert(pair).second) {
      report.AddError(IssueKind::kDuplicate, "total_only", 0,
                      absl::StrCat("'", pair.iteration_id, "' at ",
                                   GeoLevelName(pair.geo_level), " repeated"));
    }
  }
  for (const IterationAtGeoLevel& pair : spec.exclusions) {
    if (!iterations.contains(pair.iteration_id)) {
      report.AddError(IssueKind::kUnknownReference, "exclusions", 0,
                      absl::StrCat("unknown iteration '", pair.iteration_id, "'"));
    }
  }
}

ValidationReport ValidateInputs(const ParsedPersons& persons,
                                const Universe& universe) {
  ValidationReport report;
  const int cap = universe.spec().race_cap;
  for (size_t i = 0; i < persons.records.size(); ++i) {
    const PersonRecord& r = persons.records[i];
    const int64_t line = i < persons.lines.size() ? persons.lines[i] : 0;
    const absl::string_view file = persons.file;
    if (!universe.HasBlock(r.block_id)) {
      report.AddError(IssueKind::kUnknownBlock, file, line,
                      absl::StrCat("block '", r.block_id,
                                   "' is not in the geography file"));
    }
    if (r.race_codes.empty()) {
      report.AddError(IssueKind::kBadValue, file, line,
                      "record has no race codes");
    }
    if (static_cast<int>(r.race_codes.size()) > cap) {
      report.AddError(IssueKind::kRaceMultiplicity, file, line,
                      absl::StrCat("race multiplicity exceeded: ",
                                   r.race_codes.size(), " codes, limit ", cap));
    }
    std::set<absl::string_view> distinct;
    for (const std::string& code : r.race_codes) {
      if (!distinct.insert(code).second) {
        report.AddError(IssueKind::kDuplicate, file, line,
                        absl::StrCat("race code '", code, "' repeated"));
      }
      if (!universe.IsRaceCode(code)) {
        report.AddError(IssueKind::kUnknownCode, file, line,
                        absl::StrCat("unknown race code '", code, "'"));
      }
    }
    // Without ethnicity iterations any nonempty code is accepted.
    if (r.ethnicity_code.empty()) {
      report.AddError(IssueKind::kBadValue, file, line,
                      "record has no ethnicity code");
    } else if (!universe.ethnicity_codes().empty() &&
               !universe.IsEthnicityCode(r.ethnicity_code)) {
      report.AddError(IssueKind::kUnknownCode, file, line,
                      absl::StrCat("unknown ethnicity code '",
                                   r.ethnicity_code, "'"));
    }
    if (r.age > kTypicalMaxAge) {
      report.AddWarning(IssueKind::kAgeAboveTypicalRange, file, line,
                        absl::StrCat("age ", r.age, " above ", kTypicalMaxAge));
    }
  }
  return report;
}

absl::StatusOr<SpecFiles> LoadSpecFiles(const SpecPaths& paths,
                                        ValidationReport& report) {
  SpecFiles spec;
  auto load = [&](const std::filesystem::path& path, auto parse) -> absl::Status {
    auto text = ReadFile(path);
    if (!text.ok()) return text.status();
    std::istringstream in(*text);
    parse(in, path.filename().string());
    return absl::OkStatus();
  };
  absl::Status s = load(paths.geography, [&](std::istream& in, std::string f) {
    spec.geography = ParseGeography(in, f, report);
  });
  if (!s.ok()) return s;
  s = load(paths.iterations, [&](std::istream& in, std::string f) {
    spec.iterations = ParseIterations(in, f, report);
  });
  if (!s.ok()) return s;
  s = load(paths.levels, [&](std::istream& in, std::string f) {
    spec.levels = ParseLevels(in, f, report);
  });
  if (!s.ok()) return s;
  s = load(paths.total_only, [&](std::istream& in, std::string f) {
    spec.total_only = ParseIterationGeoPairs(in, f, report);
  });
  if (!s.ok()) return s;
  if (!paths.exclusions.empty()) {
    s = load(paths.exclusions, [&](std::istream& in, std::string f) {
      spec.exclusions = ParseIterationGeoPairs(in, f, report);
    });
    if (!s.ok()) return s;
  }
  return spec;
}

absl::StatusOr<ParsedPersons> LoadPersons(const std::filesystem::path& path,
                                          ValidationReport& report) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  std::istringstream in(*text);
  return ParsePersons(in, path.filename().string(), report);
}

std::string FormatPersons(std::span<const PersonRecord> records) {
  std::string out = "block|race_codes|ethnicity|sex|age\n";
  for (const PersonRecord& r : records) {
    absl::StrAppend(&out, r.block_id, "|", absl::StrJoin(r.race_codes, ","), "|",
                    r.ethnicity_code, "|", SexName(r.sex), "|", r.age, "\n");
  }
  return out;
}

}  // namespace dptab
