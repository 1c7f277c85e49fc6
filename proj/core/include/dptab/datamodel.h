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

// Person records, public specification data, population groups and the
// record -> population-group mapping for each population group level.

#ifndef DPTAB_DATAMODEL_H_
#define DPTAB_DATAMODEL_H_

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include "absl/strings/string_view.h"
#include <unordered_map>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dptab/rational.h"

namespace dptab {

// Hard cap on race codes per record imposed by data collection.
inline constexpr int kMaxRaceCodes = 8;

enum class GeoLevel { kNation, kState, kCounty, kTract, kPlace, kAiannh };
inline constexpr std::array<GeoLevel, 6> kAllGeoLevels = {
    GeoLevel::kNation, GeoLevel::kState, GeoLevel::kCounty,
    GeoLevel::kTract,  GeoLevel::kPlace, GeoLevel::kAiannh};

absl::string_view GeoLevelName(GeoLevel level);
absl::StatusOr<GeoLevel> ParseGeoLevel(absl::string_view text);
inline bool IsSubState(GeoLevel level) {
  return level != GeoLevel::kNation && level != GeoLevel::kState;
}

enum class IterationLevel { kDetailed, kRegional };
absl::string_view IterationLevelName(IterationLevel level);
absl::StatusOr<IterationLevel> ParseIterationLevel(absl::string_view text);

enum class AloneFlag { kAlone, kAloneOrInAnyCombination };
absl::string_view AloneFlagName(AloneFlag flag);
absl::StatusOr<AloneFlag> ParseAloneFlag(absl::string_view text);

enum class CodeKind { kRace, kEthnicity };
absl::string_view CodeKindName(CodeKind kind);
absl::StatusOr<CodeKind> ParseCodeKind(absl::string_view text);

enum class Sex { kMale, kFemale };
inline constexpr std::array<Sex, 2> kAllSexes = {Sex::kMale, Sex::kFemale};
absl::string_view SexName(Sex sex);
absl::StatusOr<Sex> ParseSex(absl::string_view text);

enum class Region { kUS, kPR };
absl::string_view RegionName(Region region);
absl::StatusOr<Region> ParseRegion(absl::string_view text);

struct PersonRecord {
  std::string block_id;
  std::vector<std::string> race_codes;
  std::string ethnicity_code;
  Sex sex = Sex::kMale;
  int32_t age = 0;
};

// One row of geo.txt. Place and AIANNH may be empty: a block need not lie in
// any place or AIANNH area.
struct BlockGeography {
  std::string block_id;
  std::string state;
  std::string county;
  std::string tract;
  std::string place;
  std::string aiannh;
};

struct CharacteristicIteration {
  std::string id;
  IterationLevel level = IterationLevel::kDetailed;
  AloneFlag alone = AloneFlag::kAlone;
  CodeKind kind = CodeKind::kRace;
  std::set<std::string> codes;
};

struct LevelSpec {
  std::string level_id;
  GeoLevel geo_level = GeoLevel::kNation;
  IterationLevel iteration_level = IterationLevel::kDetailed;
  Rational budget;
  // Declared stability Δ(g_i); defaults to race_cap + 1 when unset.
  std::optional<int64_t> stability;
};

struct IterationAtGeoLevel {
  std::string iteration_id;
  GeoLevel geo_level = GeoLevel::kNation;
  friend auto operator<=>(const IterationAtGeoLevel&,
                          const IterationAtGeoLevel&) = default;
};

// The public inputs: everything except the person records.
struct SpecFiles {
  std::vector<BlockGeography> geography;
  std::vector<CharacteristicIteration> iterations;
  std::vector<LevelSpec> levels;
  std::vector<IterationAtGeoLevel> total_only;
  std::vector<IterationAtGeoLevel> exclusions;
  int race_cap = kMaxRaceCodes;
  std::string nation_entity = "US";
};

struct PopulationGroup {
  GeoLevel geo_level = GeoLevel::kNation;
  std::string entity_id;
  std::string iteration_id;
  friend auto operator<=>(const PopulationGroup&,
                          const PopulationGroup&) = default;
};

std::string DescribeGroup(const PopulationGroup& group);

struct KeySetGroup {
  PopulationGroup group;
  bool total_only = false;
};

// Data-independent enumeration of every population group in one level.
struct KeySet {
  std::string level_id;
  size_t level_index = 0;
  GeoLevel geo_level = GeoLevel::kNation;
  IterationLevel iteration_level = IterationLevel::kDetailed;
  std::vector<KeySetGroup> groups;  // sorted by (entity_id, iteration_id)

  std::optional<size_t> Find(const PopulationGroup& group) const;
};

// Immutable index over validated SpecFiles. Pure and thread-safe after
// construction.
class Universe {
 public:
  // Validates the spec files (see ValidateSpecFiles) and builds the lookup
  // tables. Fails with InvalidArgument listing every violation.
  static absl::StatusOr<Universe> Build(SpecFiles spec);

  const SpecFiles& spec() const { return spec_; }
  size_t level_count() const { return spec_.levels.size(); }
  const LevelSpec& level(size_t index) const { return spec_.levels[index]; }
  absl::StatusOr<size_t> LevelIndex(absl::string_view level_id) const;

  bool HasBlock(absl::string_view block_id) const;
  bool IsRaceCode(absl::string_view code) const;
  bool IsEthnicityCode(absl::string_view code) const;
  // Code domains: the union of member codes over iterations of each kind.
  const std::set<std::string, std::less<>>& race_codes() const {
    return race_codes_;
  }
  const std::set<std::string, std::less<>>& ethnicity_codes() const {
    return ethnicity_codes_;
  }

  // Entity containing `block_id` at `level`, or nullopt when the block is
  // outside every entity of that level (possible for Place and AIANNH).
  std::optional<std::string> EntityFor(absl::string_view block_id,
                                       GeoLevel level) const;

  // Sorted distinct entities at `level`.
  const std::vector<std::string>& EntitiesAt(GeoLevel level) const;

  // Iterations tabulated at level `level_index` (exclusions removed).
  const std::vector<size_t>& IterationsAtLevel(size_t level_index) const;
  const CharacteristicIteration& iteration(size_t index) const {
    return spec_.iterations[index];
  }

  bool IsTotalOnly(const PopulationGroup& group) const;

  // g_i: every population group of level `level_index` that contains `record`.
  // Alone race iterations require all of the record's race codes to be
  // members; AOIC iterations require at least one; ethnicity iterations are
  // Alone on the single ethnicity code. Sorted by iteration id.
  std::vector<PopulationGroup> MapToGroups(const PersonRecord& record,
                                           size_t level_index) const;

  // Declared Δ(g_i): the level override if given, else race_cap + 1.
  int64_t StabilityOf(size_t level_index) const;

  // A sound, data-independent upper bound on max_r |g_i(r)| derived from the
  // iteration membership structure and race_cap. Build() rejects levels whose
  // declared stability is below this bound.
  int64_t StructuralStabilityBound(size_t level_index) const;

  // Full cross product of entities x iterations for the level, built only
  // from the spec files.
  absl::StatusOr<KeySet> BuildKeySet(absl::string_view level_id) const;
  KeySet BuildKeySet(size_t level_index) const;

 private:
  explicit Universe(SpecFiles spec);

  SpecFiles spec_;
  std::unordered_map<std::string, size_t> block_index_;
  std::set<std::string, std::less<>> race_codes_;
  std::set<std::string, std::less<>> ethnicity_codes_;
  std::map<GeoLevel, std::vector<std::string>> entities_;
  std::vector<std::vector<size_t>> level_iterations_;
  // Per level: code -> iterations at that level whose member set contains it.
  std::vector<std::unordered_map<std::string, std::vector<size_t>>> code_index_;
  std::set<IterationAtGeoLevel> total_only_;
};

// Restricts geography to one region's blocks and names the top-level entity
// after the region. Blocks whose state equals `pr_state` belong to PR.
SpecFiles RestrictToRegion(const SpecFiles& spec, Region region,
                           absl::string_view pr_state);

}  // namespace dptab

#endif  // DPTAB_DATAMODEL_H_
