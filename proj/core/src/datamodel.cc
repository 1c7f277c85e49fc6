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

#include "dptab/datamodel.h"

#include <algorithm>
#include <functional>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "dptab/ingest.h"

namespace dptab {
namespace {

std::string Lower(absl::string_view text) {
  return absl::AsciiStrToLower(absl::StripAsciiWhitespace(text));
}

const std::string& GeoColumn(const BlockGeography& row, GeoLevel level) {
  switch (level) {
    case GeoLevel::kState:
      return row.state;
    case GeoLevel::kCounty:
      return row.county;
    case GeoLevel::kTract:
      return row.tract;
    case GeoLevel::kPlace:
      return row.place;
    case GeoLevel::kAiannh:
      return row.aiannh;
    case GeoLevel::kNation:
      break;
  }
  static const std::string kEmpty;
  return kEmpty;
}

// Sum of the `count` largest values.
int64_t TopSum(std::vector<int64_t> values, int64_t count) {
  std::sort(values.begin(), values.end(), std::greater<>());
  int64_t total = 0;
  for (int64_t i = 0; i < count && i < static_cast<int64_t>(values.size()); ++i) {
    total += values[i];
  }
  return total;
}

}  // namespace

absl::string_view GeoLevelName(GeoLevel level) {
  switch (level) {
    case GeoLevel::kNation:
      return "Nation";
    case GeoLevel::kState:
      return "State";
    case GeoLevel::kCounty:
      return "County";
    case GeoLevel::kTract:
      return "Tract";
    case GeoLevel::kPlace:
      return "Place";
    case GeoLevel::kAiannh:
      return "AIANNH";
  }
  return "?";
}

absl::StatusOr<GeoLevel> ParseGeoLevel(absl::string_view text) {
  const std::string lower = Lower(text);
  for (GeoLevel level : kAllGeoLevels) {
    if (lower == Lower(GeoLevelName(level))) return level;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown geo level '", text, "'"));
}

absl::string_view IterationLevelName(IterationLevel level) {
  return level == IterationLevel::kDetailed ? "Detailed" : "Regional";
}

absl::StatusOr<IterationLevel> ParseIterationLevel(absl::string_view text) {
  const std::string lower = Lower(text);
  if (lower == "detailed") return IterationLevel::kDetailed;
  if (lower == "regional") return IterationLevel::kRegional;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown iteration level '", text, "'"));
}

absl::string_view AloneFlagName(AloneFlag flag) {
  return flag == AloneFlag::kAlone ? "Alone" : "AOIC";
}

absl::StatusOr<AloneFlag> ParseAloneFlag(absl::string_view text) {
  const std::string lower = Lower(text);
  if (lower == "alone") return AloneFlag::kAlone;
  if (lower == "aoic" || lower == "aloneorinanycombination") {
    return AloneFlag::kAloneOrInAnyCombination;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown alone flag '", text, "'"));
}

absl::string_view CodeKindName(CodeKind kind) {
  return kind == CodeKind::kRace ? "race" : "ethnicity";
}

absl::StatusOr<CodeKind> ParseCodeKind(absl::string_view text) {
  const std::string lower = Lower(text);
  if (lower == "race") return CodeKind::kRace;
  if (lower == "ethnicity") return CodeKind::kEthnicity;
  return absl::InvalidArgumentError(absl::StrCat("unknown code kind '", text, "'"));
}

absl::string_view SexName(Sex sex) { return sex == Sex::kMale ? "Male" : "Female"; }

absl::StatusOr<Sex> ParseSex(absl::string_view text) {
  const std::string lower = Lower(text);
  if (lower == "male") return Sex::kMale;
  if (lower == "female") return Sex::kFemale;
  return absl::InvalidArgumentError(absl::StrCat("unknown sex '", text, "'"));
}

absl::string_view RegionName(Region region) {
  return region == Region::kUS ? "US" : "PR";
}

absl::StatusOr<Region> ParseRegion(absl::string_view text) {
  const std::string lower = Lower(text);
  if (lower == "us") return Region::kUS;
  if (lower == "pr") return Region::kPR;
  return absl::InvalidArgumentError(absl::StrCat("unknown region '", text, "'"));
}

std::string DescribeGroup(const PopulationGroup& group) {
  return absl::StrCat("(", GeoLevelName(group.geo_level), " ", group.entity_id,
                      ", ", group.iteration_id, ")");
}

std::optional<size_t> KeySet::Find(const PopulationGroup& group) const {
  auto it = std::lower_bound(
      groups.begin(), groups.end(), group,
      [](const KeySetGroup& a, const PopulationGroup& b) { return a.group < b; });
  if (it == groups.end() || it->group != group) return std::nullopt;
  return static_cast<size_t>(it - groups.begin());
}

Universe::Universe(SpecFiles spec) : spec_(std::move(spec)) {
  for (size_t i = 0; i < spec_.geography.size(); ++i) {
    block_index_.emplace(spec_.geography[i].block_id, i);
  }
  for (const CharacteristicIteration& it : spec_.iterations) {
    auto& domain = it.kind == CodeKind::kRace ? race_codes_ : ethnicity_codes_;
    domain.insert(it.codes.begin(), it.codes.end());
  }
  entities_[GeoLevel::kNation] = {spec_.nation_entity};
  for (GeoLevel level : kAllGeoLevels) {
    if (level == GeoLevel::kNation) continue;
    std::set<std::string> distinct;
    for (const BlockGeography& row : spec_.geography) {
      const std::string& entity = GeoColumn(row, level);
      if (!entity.empty()) distinct.insert(entity);
    }
    entities_[level].assign(distinct.begin(), distinct.end());
  }
  std::set<IterationAtGeoLevel> excluded(spec_.exclusions.begin(),
                                         spec_.exclusions.end());
  total_only_.insert(spec_.total_only.begin(), spec_.total_only.end());
  level_iterations_.resize(spec_.levels.size());
  code_index_.resize(spec_.levels.size());
  for (size_t li = 0; li < spec_.levels.size(); ++li) {
    const LevelSpec& level = spec_.levels[li];
    std::vector<size_t> members;
    for (size_t ii = 0; ii < spec_.iterations.size(); ++ii) {
      const CharacteristicIteration& it = spec_.iterations[ii];
      if (it.level != level.iteration_level) continue;
      if (excluded.contains({it.id, level.geo_level})) continue;
      members.push_back(ii);
    }
    std::sort(members.begin(), members.end(), [&](size_t a, size_t b) {
      return spec_.iterations[a].id < spec_.iterations[b].id;
    });
    for (size_t ii : members) {
      for (const std::string& code : spec_.iterations[ii].codes) {
        code_index_[li][code].push_back(ii);
      }
    }
    level_iterations_[li] = std::move(members);
  }
}

absl::StatusOr<Universe> Universe::Build(SpecFiles spec) {
  ValidationReport report;
  ValidateSpecFiles(spec, report);
  if (!report.ok()) return report.ToStatus();
  Universe universe(std::move(spec));
  for (size_t li = 0; li < universe.level_count(); ++li) {
    const int64_t declared = universe.StabilityOf(li);
    const int64_t bound = universe.StructuralStabilityBound(li);
    if (declared < bound) {
      report.AddError(
          IssueKind::kStability, "levels", 0,
          absl::StrCat("level '", universe.level(li).level_id,
                       "' declares stability ", declared,
                       " but a record can reach ", bound,
                       " population groups; set its stability column"));
    }
  }
  if (!report.ok()) return report.ToStatus();
  return universe;
}

absl::StatusOr<size_t> Universe::LevelIndex(absl::string_view level_id) const {
  for (size_t i = 0; i < spec_.levels.size(); ++i) {
    if (spec_.levels[i].level_id == level_id) return i;
  }
  return absl::NotFoundError(absl::StrCat("unknown level '", level_id, "'"));
}

bool Universe::HasBlock(absl::string_view block_id) const {
  return block_index_.contains(std::string(block_id));
}

bool Universe::IsRaceCode(absl::string_view code) const {
  return race_codes_.find(code) != race_codes_.end();
}

bool Universe::IsEthnicityCode(absl::string_view code) const {
  return ethnicity_codes_.find(code) != ethnicity_codes_.end();
}

std::optional<std::string> Universe::EntityFor(absl::string_view block_id,
                                               GeoLevel level) const {
  if (level == GeoLevel::kNation) return spec_.nation_entity;
  auto it = block_index_.find(std::string(block_id));
  if (it == block_index_.end()) return std::nullopt;
  const std::string& entity = GeoColumn(spec_.geography[it->second], level);
  if (entity.empty()) return std::nullopt;
  return entity;
}

const std::vector<std::string>& Universe::EntitiesAt(GeoLevel level) const {
  return entities_.at(level);
}

const std::vector<size_t>& Universe::IterationsAtLevel(size_t level_index) const {
  return level_iterations_[level_index];
}

bool Universe::IsTotalOnly(const PopulationGroup& group) const {
  return total_only_.contains({group.iteration_id, group.geo_level});
}

std::vector<PopulationGroup> Universe::MapToGroups(const PersonRecord& record,
                                                   size_t level_index) const {
  std::vector<PopulationGroup> out;
  const LevelSpec& level = spec_.levels[level_index];
  const std::optional<std::string> entity =
      EntityFor(record.block_id, level.geo_level);
  if (!entity.has_value()) return out;
  const auto& index = code_index_[level_index];

  std::set<size_t> matched;
  for (const std::string& code : record.race_codes) {
    auto it = index.find(code);
    if (it == index.end()) continue;
    for (size_t ii : it->second) {
      const CharacteristicIteration& iteration = spec_.iterations[ii];
      if (iteration.kind != CodeKind::kRace) continue;
      if (iteration.alone == AloneFlag::kAloneOrInAnyCombination) {
        matched.insert(ii);
        continue;
      }
      const bool all_inside = std::all_of(
          record.race_codes.begin(), record.race_codes.end(),
          [&](const std::string& c) { return iteration.codes.contains(c); });
      if (all_inside) matched.insert(ii);
    }
  }
  if (auto it = index.find(record.ethnicity_code); it != index.end()) {
    for (size_t ii : it->second) {
      if (spec_.iterations[ii].kind == CodeKind::kEthnicity) matched.insert(ii);
    }
  }
  out.reserve(matched.size());
  for (size_t ii : matched) {
    out.push_back(
        PopulationGroup{level.geo_level, *entity, spec_.iterations[ii].id});
  }
  std::sort(out.begin(), out.end());
  return out;
}

int64_t Universe::StabilityOf(size_t level_index) const {
  const LevelSpec& level = spec_.levels[level_index];
  if (level.stability.has_value()) return *level.stability;
  return spec_.race_cap + 1;
}

int64_t Universe::StructuralStabilityBound(size_t level_index) const {
  // For a set S of at most race_cap distinct race codes:
  //   AOIC hits  A(S) = |union of AOIC iterations touching S|
  //   Alone hits L(S) = #{Alone X : S subset of X}
  // If L(S) = 0, A(S) <= min(#AOIC, sum of the race_cap largest per-code
  // AOIC counts). If L(S) > 0, S lies inside some Alone X, so A(S) is bounded
  // by the AOIC iterations touching X and L(S) by the largest per-code Alone
  // count inside X. Ethnicity adds at most the largest per-code count.
  const int64_t cap = spec_.race_cap;
  std::unordered_map<std::string, int64_t> aoic_count;
  std::unordered_map<std::string, int64_t> alone_count;
  std::unordered_map<std::string, std::vector<size_t>> aoic_of;
  int64_t total_aoic = 0;
  int64_t ethnicity = 0;
  std::vector<size_t> alone_race;
  for (size_t ii : level_iterations_[level_index]) {
    const CharacteristicIteration& it = spec_.iterations[ii];
    if (it.kind == CodeKind::kEthnicity) continue;
    if (it.alone == AloneFlag::kAloneOrInAnyCombination) {
      ++total_aoic;
      for (const std::string& c : it.codes) {
        ++aoic_count[c];
        aoic_of[c].push_back(ii);
      }
    } else {
      alone_race.push_back(ii);
      for (const std::string& c : it.codes) ++alone_count[c];
    }
  }
  for (const auto& [code, iterations] : code_index_[level_index]) {
    int64_t n = 0;
    for (size_t ii : iterations) {
      if (spec_.iterations[ii].kind == CodeKind::kEthnicity) ++n;
    }
    ethnicity = std::max(ethnicity, n);
  }

  std::vector<int64_t> counts;
  for (const auto& [code, n] : aoic_count) counts.push_back(n);
  int64_t race = std::min(total_aoic, TopSum(counts, cap));

  for (size_t ii : alone_race) {
    const CharacteristicIteration& x = spec_.iterations[ii];
    std::set<size_t> touching;
    std::vector<int64_t> inside_counts;
    int64_t alone_max = 0;
    for (const std::string& c : x.codes) {
      if (auto it = aoic_of.find(c); it != aoic_of.end()) {
        touching.insert(it->second.begin(), it->second.end());
        inside_counts.push_back(aoic_count[c]);
      }
      alone_max = std::max(alone_max, alone_count[c]);
    }
    const int64_t aoic_hits =
        std::min<int64_t>(touching.size(), TopSum(inside_counts, cap));
    race = std::max(race, aoic_hits + alone_max);
  }
  return race + ethnicity;
}

KeySet Universe::BuildKeySet(size_t level_index) const {
  const LevelSpec& level = spec_.levels[level_index];
  KeySet keyset;
  keyset.level_id = level.level_id;
  keyset.level_index = level_index;
  keyset.geo_level = level.geo_level;
  keyset.iteration_level = level.iteration_level;
  for (const std::string& entity : EntitiesAt(level.geo_level)) {
    for (size_t ii : level_iterations_[level_index]) {
      PopulationGroup group{level.geo_level, entity, spec_.iterations[ii].id};
      const bool total_only = IsTotalOnly(group);
      keyset.groups.push_back(KeySetGroup{std::move(group), total_only});
    }
  }
  std::sort(keyset.groups.begin(), keyset.groups.end(),
            [](const KeySetGroup& a, const KeySetGroup& b) {
              return a.group < b.group;
            });
  return keyset;
}

absl::StatusOr<KeySet> Universe::BuildKeySet(absl::string_view level_id) const {
  auto index = LevelIndex(level_id);
  if (!index.ok()) return index.status();
  return BuildKeySet(*index);
}

SpecFiles RestrictToRegion(const SpecFiles& spec, Region region,
                           absl::string_view pr_state) {
  SpecFiles out = spec;
  out.nation_entity = std::string(RegionName(region));
  out.geography.clear();
  for (const BlockGeography& row : spec.geography) {
    const bool in_pr = row.state == pr_state;
    if (in_pr == (region == Region::kPR)) out.geography.push_back(row);
  }
  return out;
}

}  // namespace dptab
