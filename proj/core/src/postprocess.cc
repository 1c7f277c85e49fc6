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

#include "dptab/postprocess.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"

namespace dptab {
namespace {

constexpr absl::string_view kOrderRow = "ORDER";

using TableKey = std::tuple<GeoLevel, std::string, std::string>;

}  // namespace

absl::StatusOr<PublishedTable> AttachMarginals(const NoisyTable& table) {
  const AgeBinning* binning = BinningFor(table.tier);
  if (binning == nullptr) {
    return absl::InvalidArgumentError(
        absl::StrCat("marginals need a sex-by-age tier, got ",
                     TierName(table.tier)));
  }
  const size_t bins = binning->bin_count();
  if (table.cells.size() != 2 * bins) {
    return absl::InvalidArgumentError(
        absl::StrCat("table has ", table.cells.size(), " cells, tier ",
                     TierName(table.tier), " needs ", 2 * bins));
  }
  const std::vector<std::string>& keys = CellKeys(table.tier);
  PublishedTable out;
  out.level_id = table.level_id;
  out.group = table.group;
  out.tier = table.tier;
  out.cells.push_back({"Total", 0, true});
  int64_t total = 0;
  for (size_t s = 0; s < kAllSexes.size(); ++s) {
    const size_t marginal = out.cells.size();
    out.cells.push_back({std::string(SexName(kAllSexes[s])), 0, true});
    for (size_t b = 0; b < bins; ++b) {
      const size_t i = s * bins + b;
      out.cells.push_back({keys[i], table.cells[i], false});
      out.cells[marginal].count += table.cells[i];
    }
    total += out.cells[marginal].count;
  }
  out.cells.front().count = total;
  return out;
}

PublishedTable Publish(const NoisyTable& table) {
  if (IsSexByAge(table.tier)) return *AttachMarginals(table);
  PublishedTable out;
  out.level_id = table.level_id;
  out.group = table.group;
  out.tier = table.tier;
  out.cells.push_back({"Total", table.cells.front(), false});
  return out;
}

std::vector<PublishedTable> PublishAll(std::span<const NoisyTable> tables) {
  std::vector<PublishedTable> out;
  out.reserve(tables.size());
  for (const NoisyTable& t : tables) out.push_back(Publish(t));
  return out;
}

Rational Stage2SigmaSquared(const Rational& rho, const Rational& gamma,
                            int64_t stability) {
  return Rational(stability) / (2 * (1 - gamma) * rho);
}

absl::StatusOr<int64_t> DeriveThreshold(const Rational& level_budget,
                                        const Rational& gamma,
                                        int64_t stability, double p,
                                        PrivacyDefinition definition) {
  if (level_budget <= 0 || !(gamma > 0 && gamma < 1) || stability < 1) {
    return absl::InvalidArgumentError(
        "threshold needs a positive budget, gamma in (0, 1) and stability >= 1");
  }
  if (definition == PrivacyDefinition::kZcdp) {
    auto noise = DiscreteGaussian::Create(
        Stage2SigmaSquared(level_budget, gamma, stability));
    if (!noise.ok()) return noise.status();
    return noise->InverseCdf(p);
  }
  auto noise =
      TwoSidedGeometric::Create((1 - gamma) * level_budget / stability);
  if (!noise.ok()) return noise.status();
  return noise->InverseCdf(p);
}

std::vector<SuppressionLogEntry> Suppress(
    std::vector<PublishedTable>& tables,
    const std::map<std::string, int64_t, std::less<>>& thresholds) {
  std::vector<SuppressionLogEntry> log;
  for (PublishedTable& table : tables) {
    if (table.suppressed || table.tier != Tier::kTotal ||
        !IsSubState(table.group.geo_level)) {
      continue;
    }
    auto it = thresholds.find(table.level_id);
    if (it == thresholds.end()) continue;
    const int64_t total = table.cells.front().count;
    if (total < it->second) {
      table.suppressed = true;
      log.push_back({table.level_id, table.group, total, it->second});
    }
  }
  return log;
}

double SuppressionProbability(int64_t n, const DiscreteGaussian& noise,
                              int64_t threshold) {
  // n + X < T  <=>  X <= T - n - 1.
  return noise.Cdf(threshold - n - 1);
}

double ReleaseBias(int64_t n, const DiscreteGaussian& noise,
                   int64_t threshold) {
  const int64_t boundary = threshold - n;
  const int64_t w = noise.window();
  if (boundary > w) {
    return ContinuousReleaseBias(n, noise.sigma(), threshold);
  }
  long double mass = 0;
  long double moment = 0;
  for (int64_t x = std::max(boundary, -w); x <= w; ++x) {
    const long double p = noise.Pmf(x);
    mass += p;
    moment += p * x;
  }
  return static_cast<double>(moment / mass);
}

double ContinuousReleaseBias(int64_t n, double sigma, int64_t threshold) {
  const double z = static_cast<double>(threshold - n) / sigma;
  // 1 - Phi(z) via erfc keeps precision in the upper tail.
  const double survival = 0.5 * std::erfc(z / std::sqrt(2.0));
  return sigma * StandardNormalPdf(z) / survival;
}

CoterminousSpec ParseCoterminous(std::istream& in, absl::string_view file,
                                 ValidationReport& report) {
  CoterminousSpec spec;
  std::string line;
  int64_t line_no = 0;
  if (!std::getline(in, line)) {
    report.AddError(IssueKind::kSchema, file, 1, "missing header row");
    return spec;
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (absl::AsciiStrToLower(absl::StripAsciiWhitespace(line)) !=
      "set_id|geo_level|entity_id") {
    report.AddError(IssueKind::kSchema, file, 1,
                    absl::StrCat("header '", line,
                                 "' does not match 'set_id|geo_level|entity_id'"));
    return spec;
  }
  std::map<std::string, size_t> index;
  bool saw_order = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> f;
    for (absl::string_view part : absl::StrSplit(line, '|')) {
      f.emplace_back(absl::StripAsciiWhitespace(part));
    }
    if (f.size() != 3) {
      report.AddError(IssueKind::kSchema, file, line_no,
                      absl::StrCat("expected 3 fields, found ", f.size()));
      continue;
    }
    if (f[0] == kOrderRow) {
      if (saw_order) {
        report.AddError(IssueKind::kDuplicate, file, line_no,
                        "ORDER declared twice");
        continue;
      }
      saw_order = true;
      spec.order.clear();
      for (absl::string_view name : absl::StrSplit(f[1], '>')) {
        auto level = ParseGeoLevel(absl::StripAsciiWhitespace(name));
        if (!level.ok()) {
          report.AddError(IssueKind::kBadValue, file, line_no,
                          std::string(level.status().message()));
          continue;
        }
        spec.order.push_back(*level);
      }
      continue;
    }
    auto level = ParseGeoLevel(f[1]);
    if (!level.ok()) {
      report.AddError(IssueKind::kBadValue, file, line_no,
                      std::string(level.status().message()));
      continue;
    }
    if (f[0].empty() || f[2].empty()) {
      report.AddError(IssueKind::kBadValue, file, line_no,
                      "set id and entity id are required");
      continue;
    }
    auto [it, inserted] = index.emplace(f[0], spec.sets.size());
    if (inserted) spec.sets.push_back(CoterminousSet{f[0], {}});
    spec.sets[it->second].members.emplace_back(*level, f[2]);
  }
  return spec;
}

void ValidateCoterminous(const CoterminousSpec& spec, const Universe& universe,
                         ValidationReport& report) {
  std::set<GeoLevel> ordered;
  for (GeoLevel level : spec.order) {
    if (!ordered.insert(level).second) {
      report.AddError(IssueKind::kDuplicate, "coterminous", 0,
                      absl::StrCat("level ", GeoLevelName(level),
                                   " repeated in ORDER"));
    }
  }
  for (const CoterminousSet& set : spec.sets) {
    std::set<GeoLevel> levels;
    for (const auto& [level, entity] : set.members) {
      if (!levels.insert(level).second) {
        report.AddError(IssueKind::kDuplicate, "coterminous", 0,
                        absl::StrCat("set '", set.id, "' has two members at ",
                                     GeoLevelName(level)));
      }
      if (!ordered.contains(level)) {
        report.AddError(IssueKind::kInvalidLevel, "coterminous", 0,
                        absl::StrCat("set '", set.id, "': level ",
                                     GeoLevelName(level), " is not in ORDER"));
      }
      const std::vector<std::string>& known = universe.EntitiesAt(level);
      if (!std::binary_search(known.begin(), known.end(), entity)) {
        report.AddError(IssueKind::kUnknownReference, "coterminous", 0,
                        absl::StrCat("set '", set.id, "': no ",
                                     GeoLevelName(level), " entity '", entity,
                                     "'"));
      }
    }
  }
}

size_t CoterminousFixup(std::vector<PublishedTable>& tables,
                        const CoterminousSpec& spec) {
  std::map<TableKey, size_t> index;
  for (size_t i = 0; i < tables.size(); ++i) {
    const PopulationGroup& g = tables[i].group;
    index.emplace(TableKey{g.geo_level, g.entity_id, g.iteration_id}, i);
  }
  std::map<GeoLevel, size_t> rank;
  for (size_t r = 0; r < spec.order.size(); ++r) rank[spec.order[r]] = r;

  size_t overwritten = 0;
  for (const CoterminousSet& set : spec.sets) {
    std::vector<std::pair<GeoLevel, std::string>> members = set.members;
    std::stable_sort(members.begin(), members.end(),
                     [&](const auto& a, const auto& b) {
                       return rank.at(a.first) < rank.at(b.first);
                     });
    std::set<std::string> iterations;
    for (const auto& [level, entity] : members) {
      auto lo = index.lower_bound(TableKey{level, entity, ""});
      for (auto it = lo; it != index.end() && std::get<0>(it->first) == level &&
                         std::get<1>(it->first) == entity;
           ++it) {
        iterations.insert(std::get<2>(it->first));
      }
    }
    for (const std::string& iteration : iterations) {
      std::vector<size_t> group_tables;
      for (const auto& [level, entity] : members) {
        auto it = index.find(TableKey{level, entity, iteration});
        if (it != index.end()) group_tables.push_back(it->second);
      }
      auto donor = std::find_if(group_tables.begin(), group_tables.end(),
                                [&](size_t i) { return !tables[i].suppressed; });
      if (donor == group_tables.end()) continue;
      const PublishedTable& source = tables[*donor];
      for (size_t i : group_tables) {
        if (i == *donor) continue;
        PublishedTable& target = tables[i];
        if (!target.suppressed && target.tier == source.tier &&
            target.cells == source.cells) {
          continue;
        }
        target.tier = source.tier;
        target.cells = source.cells;
        target.suppressed = false;
        ++overwritten;
      }
    }
  }
  return overwritten;
}

}  // namespace dptab
