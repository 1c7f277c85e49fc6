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

#include "dptab/random.h"

#include <bit>
#include <cassert>

namespace dptab {
namespace {

std::mt19937_64 MakeEngine(uint64_t seed, uint64_t stream_id) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream_id),
                    static_cast<uint32_t>(stream_id >> 32), 0x5afe7ab1u};
  return std::mt19937_64(seq);
}

}  // namespace

RandomSource::RandomSource(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(MakeEngine(seed, stream_id)) {}

uint64_t RandomSource::UniformBelow(uint64_t bound) {
  assert(bound > 0);
  if (bound == 1) return 0;
  const int bits = std::bit_width(bound - 1);
  const uint64_t mask = bits == 64 ? ~uint64_t{0} : (uint64_t{1} << bits) - 1;
  while (true) {
    const uint64_t candidate = engine_() & mask;
    if (candidate < bound) return candidate;
  }
}

}  // namespace dptab
