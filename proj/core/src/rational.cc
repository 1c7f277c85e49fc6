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

#include "dptab/rational.h"

#include <cctype>
#include <string>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace dptab {
namespace {

bool AllDigits(absl::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!absl::ascii_isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// Decimal digits to an integer. Boost reads a leading 0 as an octal prefix,
// so the string form is avoided.
BigInt FromDigits(absl::string_view digits) {
  BigInt result = 0;
  for (char c : digits) result = result * 10 + (c - '0');
  return result;
}

BigInt Pow10(int n) {
  BigInt result = 1;
  for (int i = 0; i < n; ++i) result *= 10;
  return result;
}

}  // namespace

absl::StatusOr<Rational> ParseRational(absl::string_view text) {
  absl::string_view s = absl::StripAsciiWhitespace(text);
  const std::string original(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (const auto slash = s.find('/'); slash != absl::string_view::npos) {
    absl::string_view num = s.substr(0, slash);
    absl::string_view den = s.substr(slash + 1);
    if (!AllDigits(num) || !AllDigits(den)) {
      return absl::InvalidArgumentError(
          absl::StrCat("not a rational literal: '", original, "'"));
    }
    const BigInt d = FromDigits(den);
    if (d == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("zero denominator in '", original, "'"));
    }
    Rational r(FromDigits(num), d);
    return negative ? Rational(-r) : r;
  }
  absl::string_view int_part = s;
  absl::string_view frac_part;
  if (const auto dot = s.find('.'); dot != absl::string_view::npos) {
    int_part = s.substr(0, dot);
    frac_part = s.substr(dot + 1);
  }
  if ((int_part.empty() && frac_part.empty()) ||
      (!int_part.empty() && !AllDigits(int_part)) ||
      (!frac_part.empty() && !AllDigits(frac_part))) {
    return absl::InvalidArgumentError(
        absl::StrCat("not a decimal literal: '", original, "'"));
  }
  Rational r(FromDigits(int_part));
  if (!frac_part.empty()) {
    r += Rational(FromDigits(frac_part),
                  Pow10(static_cast<int>(frac_part.size())));
  }
  return negative ? Rational(-r) : r;
}

std::string FormatDecimal(const Rational& value, int digits) {
  const bool negative = value < 0;
  const Rational magnitude = negative ? Rational(-value) : value;
  const BigInt scale = Pow10(digits);
  const Rational scaled = magnitude * scale + Rational(1, 2);
  const BigInt rounded = Floor(scaled);
  const BigInt whole = rounded / scale;
  const BigInt frac = rounded % scale;
  std::string out = negative && rounded != 0 ? "-" : "";
  out += whole.str();
  if (digits > 0) {
    std::string f = frac.str();
    out += ".";
    out += std::string(digits - f.size(), '0');
    out += f;
  }
  return out;
}

std::string FormatExact(const Rational& value, int digits) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  std::string exact =
      den == 1 ? num.str() : absl::StrCat(num.str(), "/", den.str());
  return absl::StrCat(exact, " (", FormatDecimal(value, digits), ")");
}

double ToDouble(const Rational& value) {
  return value.convert_to<double>();
}

BigInt Floor(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  BigInt q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

BigInt FloorSqrt(const Rational& value) {
  // k*k <= value  <=>  k*k <= floor(value) for integer k.
  const BigInt n = Floor(value);
  if (n <= 0) return 0;
  return boost::multiprecision::sqrt(n);
}

}  // namespace dptab
