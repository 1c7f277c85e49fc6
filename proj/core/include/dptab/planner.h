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

// Parameter planning: converting between margins of error and privacy
// budgets, suppression thresholds, and the curve data behind the suppression
// and bias charts.

#ifndef DPTAB_PLANNER_H_
#define DPTAB_PLANNER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dptab/config.h"
#include "dptab/rational.h"

namespace dptab {

// 1.96^2 / 2, the per-query rho whose 95% half-width is one unit.
inline const Rational& MoeConstant() {
  static const Rational* const kValue = new Rational(19208, 10000);
  return *kValue;
}
// The rounded constant 1.92, which gives slightly smaller budgets.
inline const Rational& ConservativeMoeConstant() {
  static const Rational* const kValue = new Rational(192, 100);
  return *kValue;
}

// Which query a margin of error describes.
enum class MoeStep {
  kStage1,     // noisy total at gamma * rho
  kStage2,     // released statistics at (1 - gamma) * rho
  kTotalOnly,  // single total at the full rho
};

// floor(1.96 sqrt(s / (2 f rho))) with f = 1 - gamma, gamma or 1 by step,
// computed exactly.
absl::StatusOr<int64_t> MoeForLevel(const Rational& level_rho,
                                    const Rational& gamma, int64_t stability,
                                    MoeStep step = MoeStep::kStage2);

struct MoeBudget {
  Rational per_group_step2;  // constant / moe^2
  Rational step2;            // stability * per_group_step2
  Rational total;            // step2 / (1 - gamma)
};

absl::StatusOr<MoeBudget> RhoForMoe(int64_t moe, const Rational& gamma,
                                    int64_t stability,
                                    const Rational& constant = MoeConstant());

struct PlannerLevel {
  std::string level_id;
  int64_t moe = 0;
};

struct PlannerInput {
  std::vector<PlannerLevel> levels;
  Rational gamma = Rational(1, 10);
  int race_cap = 8;
  double suppression_p = 0.9999;
  // Extra level budgets to list in the threshold table and curves.
  std::vector<Rational> threshold_rhos;

  int64_t stability() const { return race_cap + 1; }
};

// Keys: gamma, race_cap, suppression_p, threshold_rhos (comma separated),
// and one "moe.<level_id> = <integer>" per level in file order.
absl::StatusOr<PlannerInput> ParsePlannerInput(const KeyValueConfig& config);

struct PlannerLevelRow {
  std::string level_id;
  int64_t moe = 0;
  double sigma = 0;  // stage-2 noise standard deviation per group
  MoeBudget budget;
  MoeBudget conservative;
  Rational bounded_step2;
  Rational bounded_total;
  int64_t threshold = 0;
};

struct ThresholdRow {
  Rational rho;
  double sigma = 0;
  int64_t threshold = 0;
  double zero_suppression = 0;  // P[suppress | true count 0]
};

struct CurvePoint {
  Rational rho;
  int64_t threshold = 0;
  double ratio = 0;  // n / T
  int64_t n = 0;
  double suppression = 0;
  double bias = 0;             // pmf summation
  double continuous_bias = 0;  // Gaussian hazard form
};

struct PlannerReport {
  std::vector<PlannerLevelRow> levels;
  Rational total_unbounded;
  Rational total_bounded;
  std::vector<ThresholdRow> thresholds;
  std::vector<CurvePoint> curves;
};

// Curves sample n / T over [0, 2] in steps of 0.05 with n = round(ratio T).
absl::StatusOr<PlannerReport> ComputePlannerReport(const PlannerInput& input);

// Writes levels.csv, thresholds.csv, bias_curve.csv, suppression_curve.csv.
absl::Status WritePlannerReport(const PlannerReport& report,
                                const std::filesystem::path& dir);

}  // namespace dptab

#endif  // DPTAB_PLANNER_H_
