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

#include "dptab/engine.h"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "dptab/noise.h"

namespace dptab {
namespace {

constexpr uint64_t kMaxOperand = uint64_t{1} << 48;

// Numerator and denominator of a positive rational as sampler operands.
absl::StatusOr<std::pair<uint64_t, uint64_t>> SamplerOperands(
    const Rational& value, absl::string_view what) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (num >= kMaxOperand || den >= kMaxOperand) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, " ", FormatExact(value),
                     " has a numerator or denominator of 2^48 or more"));
  }
  return std::make_pair(static_cast<uint64_t>(num), static_cast<uint64_t>(den));
}

absl::Status CheckBudget(const Rational& budget) {
  if (budget <= 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "noise budget must be positive, got ", FormatExact(budget)));
  }
  return absl::OkStatus();
}

std::vector<std::string> MakeCellKeys(Tier tier) {
  const AgeBinning* binning = BinningFor(tier);
  if (binning == nullptr) return {"Total"};
  std::vector<std::string> keys;
  for (Sex sex : kAllSexes) {
    for (size_t b = 0; b < binning->bin_count(); ++b) {
      keys.push_back(absl::StrCat(SexName(sex), ":", binning->Label(b)));
    }
  }
  return keys;
}

}  // namespace

absl::string_view MechanismKindName(MechanismKind kind) {
  return kind == MechanismKind::kDiscreteGaussian ? "discrete_gaussian"
                                                  : "two_sided_geometric";
}

absl::StatusOr<MechanismKind> ParseMechanismKind(absl::string_view text) {
  const std::string lower =
      absl::AsciiStrToLower(absl::StripAsciiWhitespace(text));
  if (lower == "discrete_gaussian") return MechanismKind::kDiscreteGaussian;
  if (lower == "two_sided_geometric") return MechanismKind::kTwoSidedGeometric;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown mechanism '", text,
      "' (expected discrete_gaussian or two_sided_geometric)"));
}

MechanismKind DefaultMechanism(PrivacyDefinition definition) {
  return definition == PrivacyDefinition::kZcdp
             ? MechanismKind::kDiscreteGaussian
             : MechanismKind::kTwoSidedGeometric;
}

absl::StatusOr<Thresholds> ParseThresholds(absl::string_view text) {
  std::vector<absl::string_view> parts = absl::StrSplit(text, ',');
  if (parts.size() != 3) {
    return absl::InvalidArgumentError(
        absl::StrCat("thresholds must be three integers, got '", text, "'"));
  }
  int64_t v[3];
  for (int i = 0; i < 3; ++i) {
    if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(parts[i]), &v[i]) ||
        v[i] < 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "thresholds must be nonnegative integers, got '", text, "'"));
    }
  }
  if (v[0] > v[1] || v[1] > v[2]) {
    return absl::InvalidArgumentError(
        absl::StrCat("thresholds must be nondecreasing, got '", text, "'"));
  }
  return Thresholds{v[0], v[1], v[2]};
}

absl::StatusOr<AdaptiveConfig> AdaptiveConfig::Create(
    Rational gamma, Thresholds defaults, MechanismKind mechanism,
    std::map<std::string, Thresholds, std::less<>> per_level) {
  if (!(gamma > 0 && gamma < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("gamma must be in (0, 1), got ", FormatExact(gamma)));
  }
  auto check = [](const Thresholds& t) {
    return 0 <= t.theta1 && t.theta1 <= t.theta2 && t.theta2 <= t.theta3;
  };
  if (!check(defaults)) {
    return absl::InvalidArgumentError("thresholds must be nondecreasing");
  }
  for (const auto& [level, t] : per_level) {
    if (!check(t)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "thresholds for level '", level, "' must be nondecreasing"));
    }
  }
  AdaptiveConfig config;
  config.gamma_ = std::move(gamma);
  config.defaults_ = defaults;
  config.mechanism_ = mechanism;
  config.per_level_ = std::move(per_level);
  return config;
}

const Thresholds& AdaptiveConfig::ThresholdsFor(
    absl::string_view level_id) const {
  auto it = per_level_.find(level_id);
  return it == per_level_.end() ? defaults_ : it->second;
}

absl::string_view TierName(Tier tier) {
  switch (tier) {
    case Tier::kTotalOnly:
      return "TotalOnly";
    case Tier::kTotal:
      return "Total";
    case Tier::kSexByAge4:
      return "SexByAge4";
    case Tier::kSexByAge9:
      return "SexByAge9";
    case Tier::kSexByAge23:
      return "SexByAge23";
  }
  return "?";
}

absl::string_view TableIdFor(Tier tier) {
  switch (tier) {
    case Tier::kTotalOnly:
    case Tier::kTotal:
      return "T01001";
    case Tier::kSexByAge4:
      return "T02001";
    case Tier::kSexByAge9:
      return "T02002";
    case Tier::kSexByAge23:
      return "T02003";
  }
  return "?";
}

bool IsSexByAge(Tier tier) {
  return tier != Tier::kTotalOnly && tier != Tier::kTotal;
}

Tier SelectTier(int64_t stage1_total, const Thresholds& thresholds) {
  if (stage1_total < thresholds.theta1) return Tier::kTotal;
  if (stage1_total < thresholds.theta2) return Tier::kSexByAge4;
  if (stage1_total < thresholds.theta3) return Tier::kSexByAge9;
  return Tier::kSexByAge23;
}

AgeBinning::AgeBinning(std::string name, std::vector<int32_t> lower_bounds)
    : name_(std::move(name)), lower_(std::move(lower_bounds)) {}

size_t AgeBinning::BinOf(int32_t age) const {
  auto it = std::upper_bound(lower_.begin(), lower_.end(), age);
  return it == lower_.begin() ? 0 : static_cast<size_t>(it - lower_.begin()) - 1;
}

std::string AgeBinning::Label(size_t bin) const {
  if (bin + 1 == lower_.size()) return absl::StrCat(lower_[bin], "+");
  if (lower_[bin + 1] - 1 == lower_[bin]) return absl::StrCat(lower_[bin]);
  return absl::StrCat(lower_[bin], "-", lower_[bin + 1] - 1);
}

const AgeBinning& Age4Binning() {
  static const AgeBinning* const kBinning =
      new AgeBinning("Age4", {0, 18, 45, 65});
  return *kBinning;
}

const AgeBinning& Age9Binning() {
  static const AgeBinning* const kBinning =
      new AgeBinning("Age9", {0, 5, 18, 25, 35, 45, 55, 65, 75});
  return *kBinning;
}

const AgeBinning& Age23Binning() {
  static const AgeBinning* const kBinning = new AgeBinning(
      "Age23", {0, 5, 10, 15, 18, 20, 21, 22, 25, 30, 35, 40, 45, 50, 55, 60,
                62, 65, 67, 70, 75, 80, 85});
  return *kBinning;
}

const AgeBinning* BinningFor(Tier tier) {
  switch (tier) {
    case Tier::kSexByAge4:
      return &Age4Binning();
    case Tier::kSexByAge9:
      return &Age9Binning();
    case Tier::kSexByAge23:
      return &Age23Binning();
    default:
      return nullptr;
  }
}

const std::vector<std::string>& CellKeys(Tier tier) {
  static const auto* const kKeys = new std::array<std::vector<std::string>, 5>{
      MakeCellKeys(Tier::kTotalOnly), MakeCellKeys(Tier::kTotal),
      MakeCellKeys(Tier::kSexByAge4), MakeCellKeys(Tier::kSexByAge9),
      MakeCellKeys(Tier::kSexByAge23)};
  return (*kKeys)[static_cast<size_t>(tier)];
}

size_t CellCount(Tier tier) { return CellKeys(tier).size(); }

std::vector<int64_t> TrueCells(std::span<const Demographic> records,
                               Tier tier) {
  const AgeBinning* binning = BinningFor(tier);
  if (binning == nullptr) {
    return {static_cast<int64_t>(records.size())};
  }
  const size_t bins = binning->bin_count();
  std::vector<int64_t> cells(2 * bins, 0);
  for (const Demographic& d : records) {
    const size_t sex = d.sex == Sex::kMale ? 0 : 1;
    ++cells[sex * bins + binning->BinOf(d.age)];
  }
  return cells;
}

absl::StatusOr<std::vector<int64_t>> DiscreteGaussianMechanism::NoisyCount(
    std::span<const int64_t> values, const Rational& budget,
    RandomSource& rng) const {
  if (auto s = CheckBudget(budget); !s.ok()) return s;
  const Rational sigma_squared = Rational(1) / (2 * budget);
  auto operands = SamplerOperands(sigma_squared, "sigma^2");
  if (!operands.ok()) return operands.status();
  std::vector<int64_t> out(values.begin(), values.end());
  for (int64_t& v : out) {
    v += internal::SampleDiscreteGaussian(operands->first, operands->second,
                                          rng);
  }
  return out;
}

absl::StatusOr<std::vector<int64_t>> GeometricMechanism::NoisyCount(
    std::span<const int64_t> values, const Rational& budget,
    RandomSource& rng) const {
  if (auto s = CheckBudget(budget); !s.ok()) return s;
  auto operands = SamplerOperands(budget, "epsilon");
  if (!operands.ok()) return operands.status();
  std::vector<int64_t> out(values.begin(), values.end());
  for (int64_t& v : out) {
    v += internal::SampleDiscreteLaplace(operands->first, operands->second,
                                         rng);
  }
  return out;
}

absl::StatusOr<std::vector<int64_t>> ZeroNoiseMechanism::NoisyCount(
    std::span<const int64_t> values, const Rational& budget,
    RandomSource&) const {
  if (auto s = CheckBudget(budget); !s.ok()) return s;
  return std::vector<int64_t>(values.begin(), values.end());
}

std::unique_ptr<CountMechanism> MakeMechanism(MechanismKind kind) {
  if (kind == MechanismKind::kDiscreteGaussian) {
    return std::make_unique<DiscreteGaussianMechanism>();
  }
  return std::make_unique<GeometricMechanism>();
}

absl::StatusOr<NoisyTable> TabulatePopulationGroup(
    std::span<const Demographic> records, const PopulationGroup& group,
    bool total_only, const Rational& rho, const Thresholds& thresholds,
    const Rational& gamma, const CountMechanism& mechanism,
    RandomSource& rng) {
  NoisyTable table;
  table.group = group;
  const std::vector<int64_t> total = TrueCells(records, Tier::kTotal);
  if (total_only) {
    auto noisy = mechanism.NoisyCount(total, rho, rng);
    if (!noisy.ok()) return noisy.status();
    table.tier = Tier::kTotalOnly;
    table.cells = *std::move(noisy);
    table.spent = rho;
    return table;
  }
  const Rational stage1_rho = gamma * rho;
  const Rational stage2_rho = rho - stage1_rho;
  auto stage1 = mechanism.NoisyCount(total, stage1_rho, rng);
  if (!stage1.ok()) return stage1.status();
  table.stage1_total = stage1->front();
  table.tier = SelectTier(table.stage1_total, thresholds);
  auto cells = mechanism.NoisyCount(TrueCells(records, table.tier), stage2_rho,
                                    rng);
  if (!cells.ok()) return cells.status();
  table.cells = *std::move(cells);
  table.spent = stage1_rho + stage2_rho;
  return table;
}

absl::StatusOr<std::vector<NoisyTable>> RunTabulation(
    std::span<const PersonRecord> records, const Universe& universe,
    const AdaptiveConfig& config, const CountMechanism& mechanism,
    Ledger& ledger, const TabulationOptions& options) {
  if (mechanism.definition() != ledger.plan().definition()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "mechanism is calibrated for ",
        PrivacyDefinitionName(mechanism.definition()), " but the plan uses ",
        PrivacyDefinitionName(ledger.plan().definition())));
  }
  std::vector<NoisyTable> out;
  for (size_t level_index = 0; level_index < universe.level_count();
       ++level_index) {
    const LevelSpec& level = universe.level(level_index);
    const KeySet keyset = universe.BuildKeySet(level_index);
    const int64_t stability = universe.StabilityOf(level_index);
    auto level_budget = ledger.plan().BudgetFor(level.level_id);
    if (!level_budget.ok()) return level_budget.status();
    const Rational group_rho = *level_budget / stability;

    // Flat-map: each record joins every group of this level containing it.
    std::vector<std::vector<Demographic>> members(keyset.groups.size());
    for (const PersonRecord& record : records) {
      for (const PopulationGroup& group :
           universe.MapToGroups(record, level_index)) {
        std::optional<size_t> index = keyset.Find(group);
        if (!index.has_value()) {
          return absl::InternalError(absl::StrCat(
              DescribeGroup(group), " is missing from the KeySet of level '",
              level.level_id, "'"));
        }
        members[*index].push_back(Demographic{record.sex, record.age});
      }
    }

    {
      // Every group spends group_rho and a record touches at most `stability`
      // groups, so the level costs stability * group_rho = rho_i. The
      // reservation is made even for a level with no groups.
      auto unit = PrivacyBudget::Create(group_rho, ledger.plan().definition());
      if (!unit.ok()) return unit.status();
      auto group_cost = MechanismCost(1, *unit);
      if (!group_cost.ok()) return group_cost.status();
      const std::vector<PrivacyBudget> costs(
          std::max<size_t>(keyset.groups.size(), 1), *group_cost);
      auto level_cost = ComposeParallel(costs, stability);
      if (!level_cost.ok()) return level_cost.status();
      if (auto s = ledger.Spend(level.level_id,
                                absl::StrCat("tabulate:", level.level_id),
                                *level_cost);
          !s.ok()) {
        return s;
      }
    }

    const Thresholds& thresholds = config.ThresholdsFor(level.level_id);
    std::vector<NoisyTable> tables(keyset.groups.size());
    std::vector<absl::Status> errors(keyset.groups.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t g = next.fetch_add(1); g < keyset.groups.size();
           g = next.fetch_add(1)) {
        RandomSource rng(options.seed, TaskStreamId(level_index, g));
        auto table = TabulatePopulationGroup(
            members[g], keyset.groups[g].group, keyset.groups[g].total_only,
            group_rho, thresholds, config.gamma(), mechanism, rng);
        if (!table.ok()) {
          errors[g] = table.status();
          continue;
        }
        table->level_id = level.level_id;
        tables[g] = *std::move(table);
      }
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    for (const absl::Status& s : errors) {
      if (!s.ok()) return s;
    }
    std::move(tables.begin(), tables.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace dptab
