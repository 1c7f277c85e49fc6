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

// key = value configuration files. Blank lines and lines starting with '#'
// are ignored; keys are unique and keep their file order.

#ifndef DPTAB_CONFIG_H_
#define DPTAB_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dptab/rational.h"

namespace dptab {

class KeyValueConfig {
 public:
  static absl::StatusOr<KeyValueConfig> Parse(absl::string_view text,
                                              absl::string_view file = "");
  // I/O failures are NotFound.
  static absl::StatusOr<KeyValueConfig> Load(const std::filesystem::path& path);

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }
  // Directory of the loaded file; relative paths resolve against it.
  const std::filesystem::path& base_dir() const { return base_dir_; }

  std::optional<std::string> Get(absl::string_view key) const;
  bool Has(absl::string_view key) const { return Get(key).has_value(); }

  absl::StatusOr<std::string> GetString(absl::string_view key) const;
  absl::StatusOr<Rational> GetRational(absl::string_view key) const;
  absl::StatusOr<int64_t> GetInt(absl::string_view key) const;
  absl::StatusOr<double> GetDouble(absl::string_view key) const;
  absl::StatusOr<std::filesystem::path> GetPath(absl::string_view key) const;

  // Entries whose key starts with `prefix`, prefix stripped.
  std::vector<std::pair<std::string, std::string>> WithPrefix(
      absl::string_view prefix) const;

  // InvalidArgument naming any key not in `known` and not starting with one
  // of `known_prefixes`.
  absl::Status CheckKnown(const std::vector<std::string>& known,
                          const std::vector<std::string>& known_prefixes) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::filesystem::path base_dir_;
};

}  // namespace dptab

#endif  // DPTAB_CONFIG_H_
