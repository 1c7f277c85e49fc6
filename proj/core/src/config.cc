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

#include "dptab/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"

namespace dptab {

absl::StatusOr<KeyValueConfig> KeyValueConfig::Parse(absl::string_view text,
                                                     absl::string_view file) {
  KeyValueConfig config;
  std::set<std::string> seen;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat(file, ":", line_no, ": expected key = value"));
    }
    std::string key(absl::StripAsciiWhitespace(line.substr(0, eq)));
    std::string value(absl::StripAsciiWhitespace(line.substr(eq + 1)));
    if (key.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat(file, ":", line_no, ": empty key"));
    }
    if (!seen.insert(key).second) {
      return absl::InvalidArgumentError(
          absl::StrCat(file, ":", line_no, ": key '", key, "' repeated"));
    }
    config.entries_.emplace_back(std::move(key), std::move(value));
  }
  return config;
}

absl::StatusOr<KeyValueConfig> KeyValueConfig::Load(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open config '", path.string(), "'"));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto config = Parse(buffer.str(), path.string());
  if (!config.ok()) return config.status();
  config->base_dir_ = path.parent_path();
  return config;
}

std::optional<std::string> KeyValueConfig::Get(absl::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

absl::StatusOr<std::string> KeyValueConfig::GetString(
    absl::string_view key) const {
  std::optional<std::string> value = Get(key);
  if (!value.has_value()) {
    return absl::InvalidArgumentError(
        absl::StrCat("missing config key '", key, "'"));
  }
  return *value;
}

absl::StatusOr<Rational> KeyValueConfig::GetRational(
    absl::string_view key) const {
  auto text = GetString(key);
  if (!text.ok()) return text.status();
  auto value = ParseRational(*text);
  if (!value.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("config key '", key, "': ", value.status().message()));
  }
  return value;
}

absl::StatusOr<int64_t> KeyValueConfig::GetInt(absl::string_view key) const {
  auto text = GetString(key);
  if (!text.ok()) return text.status();
  int64_t value = 0;
  if (!absl::SimpleAtoi(*text, &value)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "config key '", key, "' must be an integer, got '", *text, "'"));
  }
  return value;
}

absl::StatusOr<double> KeyValueConfig::GetDouble(absl::string_view key) const {
  auto text = GetString(key);
  if (!text.ok()) return text.status();
  double value = 0;
  if (!absl::SimpleAtod(*text, &value)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "config key '", key, "' must be a number, got '", *text, "'"));
  }
  return value;
}

absl::StatusOr<std::filesystem::path> KeyValueConfig::GetPath(
    absl::string_view key) const {
  auto text = GetString(key);
  if (!text.ok()) return text.status();
  std::filesystem::path path(*text);
  if (path.is_relative()) path = base_dir_ / path;
  return path;
}

std::vector<std::pair<std::string, std::string>> KeyValueConfig::WithPrefix(
    absl::string_view prefix) const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, v] : entries_) {
    if (absl::StartsWith(k, prefix) && k.size() > prefix.size()) {
      out.emplace_back(k.substr(prefix.size()), v);
    }
  }
  return out;
}

absl::Status KeyValueConfig::CheckKnown(
    const std::vector<std::string>& known,
    const std::vector<std::string>& known_prefixes) const {
  for (const auto& [k, v] : entries_) {
    bool ok = std::find(known.begin(), known.end(), k) != known.end();
    for (const std::string& prefix : known_prefixes) {
      ok = ok || absl::StartsWith(k, prefix);
    }
    if (!ok) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown config key '", k, "'"));
    }
  }
  return absl::OkStatus();
}

}  // namespace dptab
