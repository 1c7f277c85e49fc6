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

// Privacy-loss accounting. Budgets are exact rationals tagged with the
// privacy definition they are measured under (ρ for zCDP, ε for pure DP).
//
// The accountant is assertion-style: callers declare the cost of each
// measurement (sensitivity, stability and the noise parameter) and the ledger
// verifies it fits inside the plan. It does not infer stability through
// arbitrary transformations.

#ifndef DPTAB_ACCOUNTANT_H_
#define DPTAB_ACCOUNTANT_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dptab/rational.h"

namespace dptab {

enum class PrivacyDefinition { kZcdp, kPureDp };

absl::StatusOr<PrivacyDefinition> ParsePrivacyDefinition(absl::string_view text);
absl::string_view PrivacyDefinitionName(PrivacyDefinition definition);

class PrivacyBudget {
 public:
  static absl::StatusOr<PrivacyBudget> Create(Rational value,
                                              PrivacyDefinition definition);
  static PrivacyBudget Zero(PrivacyDefinition definition) {
    return PrivacyBudget(Rational(0), definition);
  }

  const Rational& value() const { return value_; }
  PrivacyDefinition definition() const { return definition_; }

  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;

 private:
  PrivacyBudget(Rational value, PrivacyDefinition definition)
      : value_(std::move(value)), definition_(definition) {}

  Rational value_;
  PrivacyDefinition definition_;
};

// Adaptive sequential composition: ρ1 + ρ2 (or ε1 + ε2).
absl::StatusOr<PrivacyBudget> ComposeSequential(const PrivacyBudget& first,
                                                const PrivacyBudget& second);

// Generalized parallel composition over a family of input subsets in which
// every record lies in at most `degree` subsets: degree * ρ. All budgets must
// be equal.
absl::StatusOr<PrivacyBudget> ComposeParallel(
    std::span<const PrivacyBudget> budgets, int64_t degree);

// Guarantee under bounded (replace-one) neighbors: exactly twice the
// unbounded (add/remove-one) figure.
absl::StatusOr<PrivacyBudget> BoundedReport(const PrivacyBudget& unbounded);

// Privacy cost of the counting mechanism run with noise parameter `param` on
// a query of the given sensitivity: Δ²ρ for the discrete Gaussian (L2
// sensitivity), Δε for the two-sided geometric (L1 sensitivity).
absl::StatusOr<PrivacyBudget> MechanismCost(int64_t sensitivity,
                                            const PrivacyBudget& param);

struct LevelAllocation {
  std::string level_id;
  Rational budget;
};

class LevelBudgetPlan {
 public:
  // Rejects nonpositive level budgets, duplicate level ids and gamma outside
  // the open interval (0, 1).
  static absl::StatusOr<LevelBudgetPlan> Create(
      std::vector<LevelAllocation> levels, Rational gamma,
      PrivacyDefinition definition);

  const std::vector<LevelAllocation>& levels() const { return levels_; }
  const Rational& gamma() const { return gamma_; }
  PrivacyDefinition definition() const { return definition_; }

  Rational Total() const;
  absl::StatusOr<Rational> BudgetFor(absl::string_view level_id) const;

 private:
  LevelBudgetPlan(std::vector<LevelAllocation> levels, Rational gamma,
                  PrivacyDefinition definition)
      : levels_(std::move(levels)),
        gamma_(std::move(gamma)),
        definition_(definition) {}

  std::vector<LevelAllocation> levels_;
  Rational gamma_;
  PrivacyDefinition definition_;
};

struct LedgerEntry {
  int64_t sequence = 0;
  std::string operation_id;
  std::string level_id;  // empty for postprocessing entries
  Rational spent;
};

// Single-owner record of every spend against a LevelBudgetPlan. Overspending
// any level, spending after Close(), or spending under the wrong privacy
// definition is a hard error; nothing is ever clamped.
class Ledger {
 public:
  explicit Ledger(LevelBudgetPlan plan);

  absl::Status Spend(absl::string_view level_id, absl::string_view operation_id,
                     const PrivacyBudget& amount);

  // Postprocessing reads only released outputs and costs nothing; it is still
  // written down so the report lists every step.
  void RecordPostprocess(absl::string_view operation_id);

  void Close() { closed_ = true; }
  bool closed() const { return closed_; }

  const LevelBudgetPlan& plan() const { return plan_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }

  absl::StatusOr<Rational> Remaining(absl::string_view level_id) const;
  PrivacyBudget TotalSpent() const;

  // Human-readable report: one row per entry, per-level totals, and the
  // unbounded and bounded overall figures.
  std::string Report(absl::string_view title) const;

 private:
  LevelBudgetPlan plan_;
  std::map<std::string, Rational, std::less<>> spent_;
  std::vector<LedgerEntry> entries_;
  bool closed_ = false;
};

}  // namespace dptab

#endif  // DPTAB_ACCOUNTANT_H_
