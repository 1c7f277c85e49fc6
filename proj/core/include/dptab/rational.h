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

#ifndef DPTAB_RATIONAL_H_
#define DPTAB_RATIONAL_H_

#include <cstdint>
#include <string>
#include "absl/strings/string_view.h"

#include <boost/multiprecision/cpp_int.hpp>

#include "absl/status/statusor.h"

namespace dptab {

// Arbitrary-precision exact rational. All privacy budgets are carried in this
// type so that composition and conservation checks are exact equalities.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Parses a nonnegative-or-negative decimal literal such as "0.159", "2",
// "-1.5" or "1/3" into an exact rational. "0.159" becomes 159/1000.
absl::StatusOr<Rational> ParseRational(absl::string_view text);

// Decimal rendering rounded half-away-from-zero to `digits` places.
std::string FormatDecimal(const Rational& value, int digits);

// "num/den (decimal)" rendering used in accounting reports.
std::string FormatExact(const Rational& value, int digits = 6);

double ToDouble(const Rational& value);

// floor(value) for any rational.
BigInt Floor(const Rational& value);

// Largest k >= 0 with k*k <= value. Requires value >= 0.
BigInt FloorSqrt(const Rational& value);

}  // namespace dptab

#endif  // DPTAB_RATIONAL_H_
