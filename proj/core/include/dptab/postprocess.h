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

// Zero-budget postprocessing of noisy tables: sex marginals, suppression of
// small sub-state totals, and reconciliation of coterminous geographies.
// Nothing here reads person records.

#ifndef DPTAB_POSTPROCESS_H_
#define DPTAB_POSTPROCESS_H_

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dptab/accountant.h"
#include "dptab/datamodel.h"
#include "dptab/engine.h"
#include "dptab/ingest.h"
#include "dptab/noise.h"

namespace dptab {

struct PublishedCell {
  std::string key;
  int64_t count = 0;
  bool derived = false;  // computed from other cells, not noised directly
  friend bool operator==(const PublishedCell&, const PublishedCell&) = default;
};

struct PublishedTable {
  std::string level_id;
  PopulationGroup group;
  Tier tier = Tier::kTotal;
  std::vector<PublishedCell> cells;
  bool suppressed = false;
};

// Sex-by-age table in shell order: Total, Male, Male age cells, Female,
// Female age cells. Total and the sex marginals are sums of the noisy age
// cells. Rejects the total tiers.
absl::StatusOr<PublishedTable> AttachMarginals(const NoisyTable& table);

// AttachMarginals for sex-by-age tiers; a single "Total" cell otherwise.
PublishedTable Publish(const NoisyTable& table);
std::vector<PublishedTable> PublishAll(std::span<const NoisyTable> tables);

// Smallest T with P[X <= T] >= p for the stage-2 noise of a level run at
// budget `level_budget` with stability `stability`: discrete Gaussian with
// sigma^2 = s / (2 (1 - gamma) rho) under zCDP, two-sided geometric with
// epsilon = (1 - gamma) eps / s under pure DP.
absl::StatusOr<int64_t> DeriveThreshold(const Rational& level_budget,
                                        const Rational& gamma,
                                        int64_t stability, double p,
                                        PrivacyDefinition definition);

// Stage-2 noise scale sigma^2 = s / (2 (1 - gamma) rho).
Rational Stage2SigmaSquared(const Rational& rho, const Rational& gamma,
                            int64_t stability);

struct SuppressionLogEntry {
  std::string level_id;
  PopulationGroup group;
  int64_t noisy_total = 0;
  int64_t threshold = 0;
};

// Suppresses sub-state Total-tier tables whose noisy total is below the
// threshold of their level (release iff total >= T). Levels absent from
// `thresholds` are not suppressed. Returns the private log.
std::vector<SuppressionLogEntry> Suppress(
    std::vector<PublishedTable>& tables,
    const std::map<std::string, int64_t, std::less<>>& thresholds);

// P[n + X < T] by pmf summation.
double SuppressionProbability(int64_t n, const DiscreteGaussian& noise,
                              int64_t threshold);

// E[X | n + X >= T] by pmf summation.
double ReleaseBias(int64_t n, const DiscreteGaussian& noise, int64_t threshold);

// Continuous-Gaussian counterpart sigma phi(z) / (1 - Phi(z)) with
// z = (T - n) / sigma.
double ContinuousReleaseBias(int64_t n, double sigma, int64_t threshold);

// Sets of geographic entities whose population groups must publish identical
// statistics, and the order in which geography levels are tried as donors.
struct CoterminousSet {
  std::string id;
  std::vector<std::pair<GeoLevel, std::string>> members;
};

struct CoterminousSpec {
  std::vector<CoterminousSet> sets;
  std::vector<GeoLevel> order = {kAllGeoLevels.begin(), kAllGeoLevels.end()};
};

// coterminous.txt: header "set_id|geo_level|entity_id", one row per member,
// plus an optional row "ORDER|<level>><level>...|".
CoterminousSpec ParseCoterminous(std::istream& in, absl::string_view file,
                                 ValidationReport& report);

// Entities must exist, members of a set must sit at distinct levels, and the
// order must list each level at most once and cover every member level.
void ValidateCoterminous(const CoterminousSpec& spec, const Universe& universe,
                         ValidationReport& report);

// For each set and iteration, the first unsuppressed table in level order is
// the donor; every other table of the set takes the donor's tier and cells
// and is released. Sets with no donor stay suppressed. Returns the number of
// tables overwritten.
size_t CoterminousFixup(std::vector<PublishedTable>& tables,
                        const CoterminousSpec& spec);

}  // namespace dptab

#endif  // DPTAB_POSTPROCESS_H_
