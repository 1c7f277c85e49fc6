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

// dptab: validate inputs, run the tabulation, plan budgets, or generate a
// synthetic person file.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dptab/config.h"
#include "dptab/ingest.h"
#include "dptab/pipeline.h"
#include "dptab/planner.h"

namespace dptab {
namespace {

int Fail(const absl::Status& status) {
  std::cerr << "dptab: " << status.message() << "\n";
  return ExitCodeFor(status);
}

absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path,
                                        std::optional<uint64_t> seed,
                                        const std::string& region) {
  auto kv = KeyValueConfig::Load(path);
  if (!kv.ok()) return kv.status();
  auto config = ParseRunConfig(*kv);
  if (!config.ok()) return config.status();
  if (seed.has_value()) config->seed = *seed;
  if (!region.empty()) {
    auto r = ParseRegion(region);
    if (!r.ok()) return r.status();
    config->region = *r;
  }
  return config;
}

int Validate(const RunConfig& config) {
  auto inputs = LoadAndValidate(config);
  if (!inputs.ok()) return Fail(inputs.status());
  std::cout << inputs->report.ToString();
  return inputs->report.ok() ? kExitOk : kExitValidation;
}

int Run(const RunConfig& config) {
  auto results = RunPipeline(config);
  if (!results.ok()) return Fail(results.status());
  for (const RegionResult& r : *results) {
    std::cout << RegionName(r.region) << ": " << r.rows.size() << " rows, "
              << r.suppression_log.size() << " groups suppressed, "
              << r.coterminous_overwrites << " coterminous overwrites, spent "
              << FormatExact(r.spent_unbounded) << " (bounded "
              << FormatExact(r.spent_bounded) << ")\n";
  }
  std::cout << "outputs written to " << config.output_dir.string() << "\n";
  return kExitOk;
}

int Plan(const std::string& config_path, const std::string& out) {
  auto kv = KeyValueConfig::Load(config_path);
  if (!kv.ok()) return Fail(kv.status());
  auto input = ParsePlannerInput(*kv);
  if (!input.ok()) return Fail(input.status());
  std::filesystem::path dir = out;
  if (dir.empty()) {
    auto configured = kv->GetPath("output_dir");
    if (!configured.ok()) return Fail(configured.status());
    dir = *configured;
  }
  auto report = ComputePlannerReport(*input);
  if (!report.ok()) return Fail(report.status());
  if (auto s = WritePlannerReport(*report, dir); !s.ok()) return Fail(s);
  std::cout << "level,moe,step2_rho,total_rho,bounded_total_rho,threshold\n";
  for (const PlannerLevelRow& row : report->levels) {
    std::cout << row.level_id << "," << row.moe << ","
              << FormatDecimal(row.budget.step2, 3) << ","
              << FormatDecimal(row.budget.total, 3) << ","
              << FormatDecimal(row.bounded_total, 3) << "," << row.threshold
              << "\n";
  }
  if (!report->levels.empty()) {
    std::cout << "total," << FormatDecimal(report->total_unbounded, 3)
              << ", bounded " << FormatDecimal(report->total_bounded, 3)
              << "\n";
  }
  for (const ThresholdRow& row : report->thresholds) {
    std::cout << "threshold rho=" << FormatDecimal(row.rho, 3) << " T="
              << row.threshold << "\n";
  }
  return kExitOk;
}

int Synth(const RunConfig& config, int64_t count, const std::string& out) {
  ValidationReport report;
  auto spec = LoadSpecFiles(config.spec_paths, report);
  if (!spec.ok()) return Fail(spec.status());
  if (!report.ok()) return Fail(report.ToStatus());
  spec->race_cap = config.race_cap;
  auto universe = Universe::Build(*std::move(spec));
  if (!universe.ok()) return Fail(universe.status());
  const std::string text =
      FormatPersons(GenerateSynthetic(*universe, count, config.seed));
  const std::filesystem::path path =
      out.empty() ? config.persons : std::filesystem::path(out);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << text;
  file.close();
  if (!file) {
    return Fail(absl::InternalError(
        absl::StrCat("failed to write '", path.string(), "'")));
  }
  std::cout << "wrote " << count << " records to " << path.string() << "\n";
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Differentially private tabulation of population groups."};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<uint64_t> seed;
  std::string region;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration file")
        ->required();
    cmd->add_option("--seed", seed, "Overrides the configured seed");
    cmd->add_option("--region", region, "Run only US or PR")
        ->check(CLI::IsMember({"US", "PR"}));
  };

  CLI::App* validate = app.add_subcommand("validate", "Validate all inputs");
  add_common(validate);
  CLI::App* run = app.add_subcommand("run", "Run the full pipeline");
  add_common(run);

  std::string plan_out;
  CLI::App* plan = app.add_subcommand("plan", "Budget and threshold planning");
  plan->add_option("--config", config_path, "Planner configuration file")
      ->required();
  plan->add_option("--out", plan_out, "Output directory (default output_dir)");

  int64_t count = 1000;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic persons file");
  add_common(synth);
  synth->add_option("--count", count, "Number of records")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--out", synth_out, "Output path (default: persons key)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (*plan) return Plan(config_path, plan_out);
  auto config = LoadRunConfig(config_path, seed, region);
  if (!config.ok()) return Fail(config.status());
  if (*validate) return Validate(*config);
  if (*run) return Run(*config);
  return Synth(*config, count, synth_out);
}

}  // namespace
}  // namespace dptab

int main(int argc, char** argv) { return dptab::Main(argc, argv); }
