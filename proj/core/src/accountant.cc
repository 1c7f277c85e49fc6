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

#include "dptab/accountant.h"

#include <set>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace dptab {
namespace {

absl::Status SameDefinition(const PrivacyBudget& a, const PrivacyBudget& b) {
  if (a.definition() != b.definition()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "cannot compose a ", PrivacyDefinitionName(a.definition()),
        " budget with a ", PrivacyDefinitionName(b.definition()), " budget"));
  }
  return absl::OkStatus();
}

absl::string_view ParameterName(PrivacyDefinition definition) {
  return definition == PrivacyDefinition::kZcdp ? "rho" : "epsilon";
}

}  // namespace

absl::StatusOr<PrivacyDefinition> ParsePrivacyDefinition(absl::string_view text) {
  const std::string lower = absl::AsciiStrToLower(absl::StripAsciiWhitespace(text));
  if (lower == "zcdp") return PrivacyDefinition::kZcdp;
  if (lower == "puredp") return PrivacyDefinition::kPureDp;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown privacy definition '", text,
                   "' (expected zCDP or pureDP)"));
}

absl::string_view PrivacyDefinitionName(PrivacyDefinition definition) {
  return definition == PrivacyDefinition::kZcdp ? "zCDP" : "pureDP";
}

absl::StatusOr<PrivacyBudget> PrivacyBudget::Create(Rational value,
                                                    PrivacyDefinition definition) {
  if (value < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("privacy budget must be nonnegative, got ",
                     FormatExact(value)));
  }
  return PrivacyBudget(std::move(value), definition);
}

absl::StatusOr<PrivacyBudget> ComposeSequential(const PrivacyBudget& first,
                                                const PrivacyBudget& second) {
  if (auto s = SameDefinition(first, second); !s.ok()) return s;
  return PrivacyBudget::Create(first.value() + second.value(),
                               first.definition());
}

absl::StatusOr<PrivacyBudget> ComposeParallel(
    std::span<const PrivacyBudget> budgets, int64_t degree) {
  if (degree < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("parallel composition degree must be >= 1, got ", degree));
  }
  if (budgets.empty()) {
    return absl::InvalidArgumentError("parallel composition of no budgets");
  }
  for (const PrivacyBudget& b : budgets) {
    if (auto s = SameDefinition(budgets.front(), b); !s.ok()) return s;
    if (b.value() != budgets.front().value()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "parallel composition requires equal budgets; got ",
          FormatExact(budgets.front().value()), " and ", FormatExact(b.value())));
    }
  }
  return PrivacyBudget::Create(budgets.front().value() * degree,
                               budgets.front().definition());
}

absl::StatusOr<PrivacyBudget> BoundedReport(const PrivacyBudget& unbounded) {
  return PrivacyBudget::Create(unbounded.value() * 2, unbounded.definition());
}

absl::StatusOr<PrivacyBudget> MechanismCost(int64_t sensitivity,
                                            const PrivacyBudget& param) {
  if (sensitivity < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("sensitivity must be >= 1, got ", sensitivity));
  }
  const Rational delta(sensitivity);
  if (param.definition() == PrivacyDefinition::kZcdp) {
    return PrivacyBudget::Create(delta * delta * param.value(),
                                 param.definition());
  }
  return PrivacyBudget::Create(delta * param.value(), param.definition());
}

absl::StatusOr<LevelBudgetPlan> LevelBudgetPlan::Create(
    std::vector<LevelAllocation> levels, Rational gamma,
    PrivacyDefinition definition) {
  if (!(gamma > 0 && gamma < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("gamma must be in (0, 1), got ", FormatExact(gamma)));
  }
  std::set<std::string> seen;
  for (const LevelAllocation& level : levels) {
    if (!seen.insert(level.level_id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate level id '", level.level_id, "'"));
    }
    if (level.budget <= 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("level '", level.level_id, "' has nonpositive ",
                       ParameterName(definition), " ", FormatExact(level.budget)));
    }
  }
  return LevelBudgetPlan(std::move(levels), std::move(gamma), definition);
}

Rational LevelBudgetPlan::Total() const {
  Rational total = 0;
  for (const LevelAllocation& level : levels_) total += level.budget;
  return total;
}

absl::StatusOr<Rational> LevelBudgetPlan::BudgetFor(
    absl::string_view level_id) const {
  for (const LevelAllocation& level : levels_) {
    if (level.level_id == level_id) return level.budget;
  }
  return absl::NotFoundError(absl::StrCat("no budget for level '", level_id, "'"));
}

Ledger::Ledger(LevelBudgetPlan plan) : plan_(std::move(plan)) {
  for (const LevelAllocation& level : plan_.levels()) {
    spent_.emplace(level.level_id, Rational(0));
  }
}

absl::Status Ledger::Spend(absl::string_view level_id,
                           absl::string_view operation_id,
                           const PrivacyBudget& amount) {
  if (closed_) {
    return absl::FailedPreconditionError(
        absl::StrCat("ledger is closed; cannot spend on '", operation_id, "'"));
  }
  if (amount.definition() != plan_.definition()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "spend under ", PrivacyDefinitionName(amount.definition()),
        " against a ", PrivacyDefinitionName(plan_.definition()), " plan"));
  }
  auto it = spent_.find(level_id);
  if (it == spent_.end()) {
    return absl::NotFoundError(
        absl::StrCat("spend against unknown level '", level_id, "'"));
  }
  const Rational allocated = *plan_.BudgetFor(level_id);
  const Rational after = it->second + amount.value();
  if (after > allocated) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "budget overspend on level '", level_id, "' by '", operation_id,
        "': requested ", FormatExact(amount.value()), ", remaining ",
        FormatExact(allocated - it->second)));
  }
  it->second = after;
  entries_.push_back(LedgerEntry{static_cast<int64_t>(entries_.size()) + 1,
                                 std::string(operation_id),
                                 std::string(level_id), amount.value()});
  return absl::OkStatus();
}

void Ledger::RecordPostprocess(absl::string_view operation_id) {
  entries_.push_back(LedgerEntry{static_cast<int64_t>(entries_.size()) + 1,
                                 std::string(operation_id), "", Rational(0)});
}

absl::StatusOr<Rational> Ledger::Remaining(absl::string_view level_id) const {
  auto it = spent_.find(level_id);
  if (it == spent_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown level '", level_id, "'"));
  }
  return *plan_.BudgetFor(level_id) - it->second;
}

PrivacyBudget Ledger::TotalSpent() const {
  Rational total = 0;
  for (const auto& [level, spent] : spent_) total += spent;
  return *PrivacyBudget::Create(total, plan_.definition());
}

std::string Ledger::Report(absl::string_view title) const {
  const absl::string_view param = ParameterName(plan_.definition());
  std::string out = absl::StrCat("# ", title, "\n");
  absl::StrAppend(&out, "privacy_definition: ",
                  PrivacyDefinitionName(plan_.definition()), "\n");
  absl::StrAppend(&out, "gamma: ", FormatExact(plan_.gamma()), "\n\n");
  absl::StrAppend(&out, "## spends\n");
  absl::StrAppend(&out, absl::StrFormat("%-4s %-48s %-24s %s\n", "seq",
                                        "operation", "level", param));
  for (const LedgerEntry& e : entries_) {
    absl::StrAppend(&out,
                    absl::StrFormat("%-4d %-48s %-24s %s\n", e.sequence,
                                    e.operation_id,
                                    e.level_id.empty() ? "-" : e.level_id,
                                    FormatExact(e.spent)));
  }
  absl::StrAppend(&out, "\n## levels\n");
  absl::StrAppend(&out, absl::StrFormat("%-24s %-28s %-28s %s\n", "level",
                                        "allocated", "spent", "remaining"));
  for (const LevelAllocation& level : plan_.levels()) {
    const Rational& spent = spent_.at(level.level_id);
    absl::StrAppend(&out, absl::StrFormat("%-24s %-28s %-28s %s\n",
                                          level.level_id,
                                          FormatExact(level.budget),
                                          FormatExact(spent),
                                          FormatExact(level.budget - spent)));
  }
  const PrivacyBudget total = TotalSpent();
  const PrivacyBudget bounded = *BoundedReport(total);
  absl::StrAppend(&out, "\n## totals\n");
  absl::StrAppend(&out, "plan_total_", param, ": ",
                  FormatExact(plan_.Total()), "\n");
  absl::StrAppend(&out, "spent_unbounded_", param, ": ",
                  FormatExact(total.value()), "\n");
  absl::StrAppend(&out, "spent_bounded_", param, ": ",
                  FormatExact(bounded.value()), "\n");
  return out;
}

}  // namespace dptab
