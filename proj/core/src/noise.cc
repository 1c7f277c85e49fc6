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

#include "dptab/noise.h"

#include <cmath>
#include <limits>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dptab {
namespace internal {
namespace {

constexpr uint64_t kMaxSamplerOperand = uint64_t{1} << 48;

}  // namespace

WideUint UniformBelow(const WideUint& bound, RandomSource& rng) {
  if (bound <= 1) return 0;
  const WideUint top = bound - 1;
  const unsigned bits = boost::multiprecision::msb(top) + 1;
  const unsigned words = (bits + 63) / 64;
  while (true) {
    WideUint candidate = 0;
    for (unsigned i = 0; i < words; ++i) {
      candidate <<= 64;
      candidate |= rng.NextWord();
    }
    const unsigned excess = words * 64 - bits;
    if (excess > 0) candidate >>= excess;
    if (candidate < bound) return candidate;
  }
}

bool BernoulliFraction(const WideUint& num, const WideUint& den,
                       RandomSource& rng) {
  return UniformBelow(den, rng) < num;
}

bool BernoulliExp(const WideUint& num, const WideUint& den, RandomSource& rng) {
  if (num <= den) {
    // exp(-g) for g in [0, 1]: count K until Bernoulli(g / K) fails; return
    // whether K is odd.
    WideUint k = 1;
    while (BernoulliFraction(num, den * k, rng)) ++k;
    return (k & 1) != 0;
  }
  const WideUint whole = num / den;
  for (WideUint i = 0; i < whole; ++i) {
    if (!BernoulliExp(1, 1, rng)) return false;
  }
  return BernoulliExp(num - whole * den, den, rng);
}

int64_t SampleDiscreteLaplace(uint64_t s, uint64_t t, RandomSource& rng) {
  while (true) {
    const uint64_t u = rng.UniformBelow(t);
    if (!BernoulliExp(u, t, rng)) continue;
    uint64_t v = 0;
    while (BernoulliExp(1, 1, rng)) ++v;
    const WideUint x = WideUint(u) + WideUint(t) * v;
    const WideUint y = x / s;
    const bool negative = rng.FairCoin();
    if (negative && y == 0) continue;
    const int64_t magnitude = y.convert_to<int64_t>();
    return negative ? -magnitude : magnitude;
  }
}

int64_t SampleDiscreteGaussian(uint64_t num, uint64_t den, RandomSource& rng) {
  // t = floor(sigma) + 1; propose from discrete Laplace with scale t and
  // accept with probability exp(-(|y| - sigma^2/t)^2 / (2 sigma^2)).
  const WideUint a = num;
  const WideUint b = den;
  // floor(sqrt(a/b)) == floor(sqrt(floor(a/b))).
  const WideUint tt = boost::multiprecision::sqrt(a / b) + 1;
  const uint64_t scale = tt.convert_to<uint64_t>();
  const WideUint accept_den = 2 * a * b * tt * tt;
  while (true) {
    const int64_t y = SampleDiscreteLaplace(1, scale, rng);
    const WideUint magnitude = static_cast<uint64_t>(y < 0 ? -y : y);
    const WideUint lhs = magnitude * b * tt;
    const WideUint diff = lhs > a ? lhs - a : a - lhs;
    if (BernoulliExp(diff * diff, accept_den, rng)) return y;
  }
}

}  // namespace internal

namespace {

absl::StatusOr<std::pair<uint64_t, uint64_t>> SamplerOperands(
    const Rational& value, absl::string_view what) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (num <= 0) {
    return absl::InvalidArgumentError(absl::StrCat(what, " must be positive"));
  }
  if (num >= internal::kMaxSamplerOperand ||
      den >= internal::kMaxSamplerOperand) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, " ", FormatExact(value),
                     " has numerator or denominator >= 2^48"));
  }
  return std::make_pair(num.convert_to<uint64_t>(), den.convert_to<uint64_t>());
}

}  // namespace

double StandardNormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double StandardNormalPdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

DiscreteGaussian::DiscreteGaussian(Rational sigma_squared, uint64_t num,
                                   uint64_t den)
    : sigma_squared_(std::move(sigma_squared)),
      num_(num),
      den_(den),
      sigma_(std::sqrt(ToDouble(sigma_squared_))) {
  window_ = std::max<int64_t>(static_cast<int64_t>(std::ceil(12.0 * sigma_)), 50);
  auto tables = std::make_shared<Tables>();
  tables->pmf.resize(window_ + 1);
  tables->upper.resize(window_ + 1);
  const long double s2 = static_cast<long double>(num) / den;
  std::vector<long double> weight(window_ + 1);
  long double normalizer = 0;
  for (int64_t x = window_; x >= 0; --x) {
    const long double lx = static_cast<long double>(x);
    weight[x] = std::exp(-lx * lx / (2.0L * s2));
    normalizer += x == 0 ? weight[x] : 2.0L * weight[x];
  }
  long double tail = 0;
  for (int64_t x = window_; x >= 0; --x) {
    const long double p = weight[x] / normalizer;
    tail += p;
    tables->pmf[x] = static_cast<double>(p);
    tables->upper[x] = static_cast<double>(tail);
  }
  tables_ = std::move(tables);
}

absl::StatusOr<DiscreteGaussian> DiscreteGaussian::Create(
    const Rational& sigma_squared) {
  auto operands = SamplerOperands(sigma_squared, "sigma^2");
  if (!operands.ok()) return operands.status();
  if (sigma_squared > Rational(10'000'000'000LL)) {
    return absl::InvalidArgumentError("sigma^2 above 1e10 is not supported");
  }
  return DiscreteGaussian(sigma_squared, operands->first, operands->second);
}

absl::StatusOr<DiscreteGaussian> DiscreteGaussian::ForZcdp(const Rational& rho) {
  if (rho <= 0) return absl::InvalidArgumentError("rho must be positive");
  return Create(Rational(1) / (2 * rho));
}

double DiscreteGaussian::Pmf(int64_t x) const {
  const int64_t m = x < 0 ? -x : x;
  return m > window_ ? 0.0 : tables_->pmf[m];
}

double DiscreteGaussian::UpperTail(int64_t x) const {
  // P[X >= x] = 1 - P[X >= 1 - x] for x <= 0, by symmetry.
  if (x <= 0) return 1.0 - UpperTail(1 - x);
  return x > window_ ? 0.0 : tables_->upper[x];
}

double DiscreteGaussian::Cdf(int64_t t) const {
  if (t < 0) return UpperTail(-t);
  return 1.0 - UpperTail(t + 1);
}

absl::StatusOr<int64_t> DiscreteGaussian::InverseCdf(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("probability must be in (0, 1), got ", p));
  }
  int64_t lo = -window_ - 1;  // Cdf(lo) == 0 < p
  int64_t hi = window_;       // Cdf(hi) == 1 >= p
  while (hi - lo > 1) {
    const int64_t mid = lo + (hi - lo) / 2;
    if (Cdf(mid) >= p) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

absl::StatusOr<double> DiscreteGaussian::TailBound(int64_t m) const {
  if (m < 1) {
    return absl::InvalidArgumentError(absl::StrCat("m must be >= 1, got ", m));
  }
  return 0.5 * std::erfc(static_cast<double>(m - 1) / (sigma_ * std::sqrt(2.0)));
}

double DiscreteGaussian::Variance() const {
  long double total = 0;
  for (int64_t x = window_; x >= 1; --x) {
    total += 2.0L * static_cast<long double>(x) * x * tables_->pmf[x];
  }
  return static_cast<double>(total);
}

TwoSidedGeometric::TwoSidedGeometric(Rational epsilon, uint64_t num,
                                     uint64_t den)
    : epsilon_(std::move(epsilon)),
      num_(num),
      den_(den),
      alpha_(std::exp(-static_cast<long double>(num) / den)) {}

absl::StatusOr<TwoSidedGeometric> TwoSidedGeometric::Create(
    const Rational& epsilon) {
  auto operands = SamplerOperands(epsilon, "epsilon");
  if (!operands.ok()) return operands.status();
  return TwoSidedGeometric(epsilon, operands->first, operands->second);
}

double TwoSidedGeometric::Pmf(int64_t x) const {
  const long double m = static_cast<long double>(x < 0 ? -x : x);
  return static_cast<double>((1 - alpha_) / (1 + alpha_) * std::pow(alpha_, m));
}

double TwoSidedGeometric::Cdf(int64_t t) const {
  if (t < 0) {
    return static_cast<double>(std::pow(alpha_, static_cast<long double>(-t)) /
                               (1 + alpha_));
  }
  return static_cast<double>(
      1 - std::pow(alpha_, static_cast<long double>(t + 1)) / (1 + alpha_));
}

double TwoSidedGeometric::UpperTail(int64_t x) const { return Cdf(-x); }

absl::StatusOr<int64_t> TwoSidedGeometric::InverseCdf(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("probability must be in (0, 1), got ", p));
  }
  int64_t hi = 1;
  while (Cdf(hi) < p) hi *= 2;
  int64_t lo = -hi;
  while (Cdf(lo) >= p) lo *= 2;
  while (hi - lo > 1) {
    const int64_t mid = lo + (hi - lo) / 2;
    if (Cdf(mid) >= p) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double TwoSidedGeometric::Variance() const {
  return static_cast<double>(2 * alpha_ / ((1 - alpha_) * (1 - alpha_)));
}

}  // namespace dptab
