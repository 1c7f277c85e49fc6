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

#include "dptab/planner.h"

#include <cmath>
#include <fstream>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/ascii.h"
#include "dptab/accountant.h"
#include "dptab/noise.h"
#include "dptab/postprocess.h"

namespace dptab {
namespace {

// 1.96^2.
const Rational& ZSquared() {
  static const Rational* const kValue = new Rational(38416, 10000);
  return *kValue;
}

constexpr int kCurveSteps = 40;  // [0, 2] in steps of 0.05

absl::Status WriteFile(const std::filesystem::path& path,
                       const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  out.close();
  if (!out) {
    return absl::InternalError(
        absl::StrCat("failed to write '", path.string(), "'"));
  }
  return absl::OkStatus();
}

std::string D3(const Rational& r) { return FormatDecimal(r, 3); }
std::string D9(const Rational& r) { return FormatDecimal(r, 9); }

}  // namespace

absl::StatusOr<int64_t> MoeForLevel(const Rational& level_rho,
                                    const Rational& gamma, int64_t stability,
                                    MoeStep step) {
  if (level_rho <= 0 || !(gamma > 0 && gamma < 1) || stability < 1) {
    return absl::InvalidArgumentError(
        "MOE needs rho > 0, gamma in (0, 1) and stability >= 1");
  }
  Rational fraction = 1;
  if (step == MoeStep::kStage1) fraction = gamma;
  if (step == MoeStep::kStage2) fraction = 1 - gamma;
  // floor(1.96 sqrt(v)) = floor(sqrt(1.96^2 v)).
  const Rational variance = Rational(stability) / (2 * fraction * level_rho);
  return static_cast<int64_t>(FloorSqrt(ZSquared() * variance));
}

absl::StatusOr<MoeBudget> RhoForMoe(int64_t moe, const Rational& gamma,
                                    int64_t stability,
                                    const Rational& constant) {
  if (moe < 1 || !(gamma > 0 && gamma < 1) || stability < 1) {
    return absl::InvalidArgumentError(
        "budget needs moe >= 1, gamma in (0, 1) and stability >= 1");
  }
  MoeBudget out;
  out.per_group_step2 = constant / (Rational(moe) * moe);
  out.step2 = out.per_group_step2 * stability;
  out.total = out.step2 / (1 - gamma);
  return out;
}

absl::StatusOr<PlannerInput> ParsePlannerInput(const KeyValueConfig& config) {
  if (auto s = config.CheckKnown(
          {"gamma", "race_cap", "suppression_p", "threshold_rhos", "output_dir"},
          {"moe."});
      !s.ok()) {
    return s;
  }
  PlannerInput input;
  if (config.Has("gamma")) {
    auto gamma = config.GetRational("gamma");
    if (!gamma.ok()) return gamma.status();
    input.gamma = *gamma;
  }
  if (!(input.gamma > 0 && input.gamma < 1)) {
    return absl::InvalidArgumentError("gamma must be in (0, 1)");
  }
  if (config.Has("race_cap")) {
    auto cap = config.GetInt("race_cap");
    if (!cap.ok()) return cap.status();
    if (*cap < 1 || *cap > 8) {
      return absl::InvalidArgumentError("race_cap must be in [1, 8]");
    }
    input.race_cap = static_cast<int>(*cap);
  }
  if (config.Has("suppression_p")) {
    auto p = config.GetDouble("suppression_p");
    if (!p.ok()) return p.status();
    if (!(*p > 0 && *p < 1)) {
      return absl::InvalidArgumentError("suppression_p must be in (0, 1)");
    }
    input.suppression_p = *p;
  }
  if (auto rhos = config.Get("threshold_rhos"); rhos.has_value()) {
    for (absl::string_view part :
         absl::StrSplit(*rhos, ',', absl::SkipWhitespace())) {
      auto rho = ParseRational(absl::StripAsciiWhitespace(part));
      if (!rho.ok()) return rho.status();
      if (*rho <= 0) {
        return absl::InvalidArgumentError("threshold_rhos must be positive");
      }
      input.threshold_rhos.push_back(*rho);
    }
  }
  for (const auto& [level_id, value] : config.WithPrefix("moe.")) {
    int64_t moe = 0;
    if (!absl::SimpleAtoi(value, &moe) || moe < 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          "moe.", level_id, " must be a positive integer, got '", value, "'"));
    }
    input.levels.push_back({level_id, moe});
  }
  if (input.levels.empty() && input.threshold_rhos.empty()) {
    return absl::InvalidArgumentError(
        "planner config lists no moe.<level> targets and no threshold_rhos");
  }
  return input;
}

absl::StatusOr<PlannerReport> ComputePlannerReport(const PlannerInput& input) {
  PlannerReport report;
  const int64_t s = input.stability();
  for (const PlannerLevel& level : input.levels) {
    PlannerLevelRow row;
    row.level_id = level.level_id;
    row.moe = level.moe;
    auto budget = RhoForMoe(level.moe, input.gamma, s);
    if (!budget.ok()) return budget.status();
    auto conservative =
        RhoForMoe(level.moe, input.gamma, s, ConservativeMoeConstant());
    if (!conservative.ok()) return conservative.status();
    row.budget = *budget;
    row.conservative = *conservative;
    row.sigma =
        std::sqrt(ToDouble(Stage2SigmaSquared(budget->total, input.gamma, s)));
    const PrivacyBudget unbounded =
        *PrivacyBudget::Create(budget->total, PrivacyDefinition::kZcdp);
    row.bounded_total = BoundedReport(unbounded)->value();
    row.bounded_step2 =
        BoundedReport(*PrivacyBudget::Create(budget->step2,
                                             PrivacyDefinition::kZcdp))
            ->value();
    auto threshold = DeriveThreshold(budget->total, input.gamma, s,
                                     input.suppression_p,
                                     PrivacyDefinition::kZcdp);
    if (!threshold.ok()) return threshold.status();
    row.threshold = *threshold;
    report.total_unbounded += budget->total;
    report.levels.push_back(std::move(row));
  }
  report.total_bounded = 2 * report.total_unbounded;

  for (const Rational& rho : input.threshold_rhos) {
    auto noise =
        DiscreteGaussian::Create(Stage2SigmaSquared(rho, input.gamma, s));
    if (!noise.ok()) return noise.status();
    auto threshold = noise->InverseCdf(input.suppression_p);
    if (!threshold.ok()) return threshold.status();
    ThresholdRow row{rho, noise->sigma(), *threshold,
                     SuppressionProbability(0, *noise, *threshold)};
    report.thresholds.push_back(row);
    for (int step = 0; step <= kCurveSteps; ++step) {
      CurvePoint point;
      point.rho = rho;
      point.threshold = *threshold;
      point.ratio = step * 0.05;
      point.n = std::llround(point.ratio * static_cast<double>(*threshold));
      point.suppression = SuppressionProbability(point.n, *noise, *threshold);
      point.bias = ReleaseBias(point.n, *noise, *threshold);
      point.continuous_bias =
          ContinuousReleaseBias(point.n, noise->sigma(), *threshold);
      report.curves.push_back(point);
    }
  }
  return report;
}

absl::Status WritePlannerReport(const PlannerReport& report,
                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create '", dir.string(),
                                            "': ", ec.message()));
  }
  std::string levels =
      "level_id,moe,sigma,step2_rho,total_rho,bounded_step2_rho,"
      "bounded_total_rho,per_group_step2_rho,total_rho_exact,"
      "total_rho_conservative,suppression_threshold\n";
  for (const PlannerLevelRow& row : report.levels) {
    absl::StrAppend(
        &levels, row.level_id, ",", row.moe, ",",
        absl::StrFormat("%.4f", row.sigma), ",", D3(row.budget.step2), ",",
        D3(row.budget.total), ",", D3(row.bounded_step2), ",",
        D3(row.bounded_total), ",", D9(row.budget.per_group_step2), ",",
        row.budget.total.str(), ",", D9(row.conservative.total), ",",
        row.threshold, "\n");
  }
  absl::StrAppend(&levels, "TOTAL,,,,", D3(report.total_unbounded), ",,",
                  D3(report.total_bounded), ",,", report.total_unbounded.str(),
                  ",,\n");

  std::string thresholds = "rho,sigma,threshold,zero_suppression_probability\n";
  for (const ThresholdRow& row : report.thresholds) {
    absl::StrAppend(&thresholds, FormatDecimal(row.rho, 6), ",",
                    absl::StrFormat("%.4f", row.sigma), ",", row.threshold, ",",
                    absl::StrFormat("%.8f", row.zero_suppression), "\n");
  }

  std::string bias = "rho,threshold,ratio,n,bias,continuous_bias\n";
  std::string suppression = "rho,threshold,ratio,n,suppression_probability\n";
  for (const CurvePoint& p : report.curves) {
    const std::string prefix =
        absl::StrCat(FormatDecimal(p.rho, 6), ",", p.threshold, ",",
                     absl::StrFormat("%.2f", p.ratio), ",", p.n, ",");
    absl::StrAppend(&bias, prefix, absl::StrFormat("%.6f", p.bias), ",",
                    absl::StrFormat("%.6f", p.continuous_bias), "\n");
    absl::StrAppend(&suppression, prefix,
                    absl::StrFormat("%.8f", p.suppression), "\n");
  }
  for (const auto& [name, contents] :
       {std::pair<const char*, const std::string&>{"levels.csv", levels},
        {"thresholds.csv", thresholds},
        {"bias_curve.csv", bias},
        {"suppression_curve.csv", suppression}}) {
    if (auto s = WriteFile(dir / name, contents); !s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace dptab
