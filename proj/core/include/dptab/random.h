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

#ifndef DPTAB_RANDOM_H_
#define DPTAB_RANDOM_H_

#include <cstdint>
#include <random>

namespace dptab {

// A deterministic stream of uniform bits identified by (seed, stream_id).
// Each tabulation task owns one stream; distinct stream ids give independent
// sequences. Not a cryptographically secure generator: a production release
// must substitute a CSPRNG behind the same interface.
class RandomSource {
 public:
  RandomSource(uint64_t seed, uint64_t stream_id);

  RandomSource(const RandomSource&) = delete;
  RandomSource& operator=(const RandomSource&) = delete;
  RandomSource(RandomSource&&) = default;
  RandomSource& operator=(RandomSource&&) = default;

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint64_t NextWord() { return engine_(); }

  // Uniform integer in [0, bound). Requires bound > 0. Uses rejection on a
  // masked word so the result is independent of the standard library.
  uint64_t UniformBelow(uint64_t bound);

  bool FairCoin() { return (engine_() >> 63) != 0; }

 private:
  uint64_t seed_;
  uint64_t stream_id_;
  std::mt19937_64 engine_;
};

// Stream id for population group `group_index` in level `level_index`.
inline uint64_t TaskStreamId(uint64_t level_index, uint64_t group_index) {
  return (level_index << 40) | group_index;
}

}  // namespace dptab

#endif  // DPTAB_RANDOM_H_
