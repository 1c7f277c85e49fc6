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

// Adaptive two-stage tabulation of population groups.
//
// For every population group level the records are flat-mapped onto the
// groups that contain them. Each group is tabulated at the level budget
// divided by the level's stability: a noisy total at gamma * rho picks the
// granularity of the statistics, which are then released at (1 - gamma) * rho.

#ifndef DPTAB_ENGINE_H_
#define DPTAB_ENGINE_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dptab/accountant.h"
#include "dptab/datamodel.h"
#include "dptab/random.h"
#include "dptab/rational.h"

namespace dptab {

enum class MechanismKind { kDiscreteGaussian, kTwoSidedGeometric };
absl::string_view MechanismKindName(MechanismKind kind);
absl::StatusOr<MechanismKind> ParseMechanismKind(absl::string_view text);

// The mechanism that matches a privacy definition.
MechanismKind DefaultMechanism(PrivacyDefinition definition);

// Population-size thresholds (theta1, theta2, theta3) selecting the tier.
struct Thresholds {
  int64_t theta1 = 0;
  int64_t theta2 = 0;
  int64_t theta3 = 0;
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// Parses "a,b,c"; requires 0 <= a <= b <= c.
absl::StatusOr<Thresholds> ParseThresholds(absl::string_view text);

class AdaptiveConfig {
 public:
  static absl::StatusOr<AdaptiveConfig> Create(
      Rational gamma, Thresholds defaults,
      MechanismKind mechanism = MechanismKind::kDiscreteGaussian,
      std::map<std::string, Thresholds, std::less<>> per_level = {});

  const Rational& gamma() const { return gamma_; }
  MechanismKind mechanism() const { return mechanism_; }
  const Thresholds& default_thresholds() const { return defaults_; }
  const Thresholds& ThresholdsFor(absl::string_view level_id) const;

 private:
  AdaptiveConfig() = default;

  Rational gamma_;
  Thresholds defaults_;
  MechanismKind mechanism_ = MechanismKind::kDiscreteGaussian;
  std::map<std::string, Thresholds, std::less<>> per_level_;
};

enum class Tier { kTotalOnly, kTotal, kSexByAge4, kSexByAge9, kSexByAge23 };
absl::string_view TierName(Tier tier);
absl::string_view TableIdFor(Tier tier);
bool IsSexByAge(Tier tier);

// Tier chosen from a stage-1 total; comparisons are strict.
Tier SelectTier(int64_t stage1_total, const Thresholds& thresholds);

// Age bins given by their inclusive lower bounds, the first being 0 and the
// last bin open-ended.
class AgeBinning {
 public:
  AgeBinning(std::string name, std::vector<int32_t> lower_bounds);

  const std::string& name() const { return name_; }
  size_t bin_count() const { return lower_.size(); }
  const std::vector<int32_t>& lower_bounds() const { return lower_; }
  size_t BinOf(int32_t age) const;
  // "0-17", "65+".
  std::string Label(size_t bin) const;

 private:
  std::string name_;
  std::vector<int32_t> lower_;
};

const AgeBinning& Age4Binning();
const AgeBinning& Age9Binning();
const AgeBinning& Age23Binning();
// nullptr for the total tiers.
const AgeBinning* BinningFor(Tier tier);

// Cell keys of a tier in canonical order: "Total" for the total tiers,
// otherwise "<Sex>:<age label>" with Male cells first.
const std::vector<std::string>& CellKeys(Tier tier);
size_t CellCount(Tier tier);

// The attributes a tabulation reads from a record.
struct Demographic {
  Sex sex = Sex::kMale;
  int32_t age = 0;
};

// True cell counts over the full cell domain of `tier`, empty cells included.
std::vector<int64_t> TrueCells(std::span<const Demographic> records, Tier tier);

struct NoisyTable {
  std::string level_id;
  PopulationGroup group;
  Tier tier = Tier::kTotal;
  std::vector<int64_t> cells;  // aligned with CellKeys(tier)
  // Internal only; never written to any output.
  int64_t stage1_total = 0;
  // Budget consumed by this group's queries.
  Rational spent;
};

// Adds independent integer noise to each coordinate of a count vector whose
// L2 sensitivity is 1.
class CountMechanism {
 public:
  virtual ~CountMechanism() = default;
  virtual PrivacyDefinition definition() const = 0;
  virtual absl::StatusOr<std::vector<int64_t>> NoisyCount(
      std::span<const int64_t> values, const Rational& budget,
      RandomSource& rng) const = 0;
};

// Discrete Gaussian with sigma^2 = 1 / (2 rho); budget is rho.
class DiscreteGaussianMechanism : public CountMechanism {
 public:
  PrivacyDefinition definition() const override {
    return PrivacyDefinition::kZcdp;
  }
  absl::StatusOr<std::vector<int64_t>> NoisyCount(
      std::span<const int64_t> values, const Rational& budget,
      RandomSource& rng) const override;
};

// Two-sided geometric with P[x] proportional to exp(-epsilon |x|); budget is
// epsilon.
class GeometricMechanism : public CountMechanism {
 public:
  PrivacyDefinition definition() const override {
    return PrivacyDefinition::kPureDp;
  }
  absl::StatusOr<std::vector<int64_t>> NoisyCount(
      std::span<const int64_t> values, const Rational& budget,
      RandomSource& rng) const override;
};

// Returns the values unchanged. For tests of the tier logic only.
class ZeroNoiseMechanism : public CountMechanism {
 public:
  explicit ZeroNoiseMechanism(
      PrivacyDefinition definition = PrivacyDefinition::kZcdp)
      : definition_(definition) {}
  PrivacyDefinition definition() const override { return definition_; }
  absl::StatusOr<std::vector<int64_t>> NoisyCount(
      std::span<const int64_t> values, const Rational& budget,
      RandomSource& rng) const override;

 private:
  PrivacyDefinition definition_;
};

std::unique_ptr<CountMechanism> MakeMechanism(MechanismKind kind);

// Tabulates one population group at per-group budget `rho`.
absl::StatusOr<NoisyTable> TabulatePopulationGroup(
    std::span<const Demographic> records, const PopulationGroup& group,
    bool total_only, const Rational& rho, const Thresholds& thresholds,
    const Rational& gamma, const CountMechanism& mechanism, RandomSource& rng);

struct TabulationOptions {
  uint64_t seed = 0;
  int threads = 1;
};

// Tabulates every group of every level of `universe`. Before a level runs its
// full budget is reserved in `ledger` as the parallel composition of the
// per-group costs over the level's stability; an overspend aborts the run.
// Output is ordered by level, then by KeySet order, independent of threading.
absl::StatusOr<std::vector<NoisyTable>> RunTabulation(
    std::span<const PersonRecord> records, const Universe& universe,
    const AdaptiveConfig& config, const CountMechanism& mechanism,
    Ledger& ledger, const TabulationOptions& options);

}  // namespace dptab

#endif  // DPTAB_ENGINE_H_
