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

// Integer-valued noise distributions used by the counting mechanisms.
//
// Sampling is exact: every random decision is a comparison between a uniform
// integer and an integer bound, so the sampled law equals the stated pmf with
// no floating-point approximation. The pmf/cdf/inverse-cdf queries are
// numerical (long double summation) and are only used for analysis and
// postprocessing, never to draw noise.

#ifndef DPTAB_NOISE_H_
#define DPTAB_NOISE_H_

#include <cstdint>
#include <memory>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "absl/status/statusor.h"
#include "dptab/random.h"
#include "dptab/rational.h"

namespace dptab {

namespace internal {

// Wide enough for the squared offsets in the discrete Gaussian acceptance
// step; overflow throws instead of wrapping.
using WideUint = boost::multiprecision::checked_uint256_t;

WideUint UniformBelow(const WideUint& bound, RandomSource& rng);

// Bernoulli(num / den). Requires den > 0 and num <= den.
bool BernoulliFraction(const WideUint& num, const WideUint& den,
                       RandomSource& rng);

// Bernoulli(exp(-num / den)). Requires den > 0.
bool BernoulliExp(const WideUint& num, const WideUint& den, RandomSource& rng);

// Discrete Laplace with pmf proportional to exp(-|x| * s / t).
int64_t SampleDiscreteLaplace(uint64_t s, uint64_t t, RandomSource& rng);

// Discrete Gaussian with variance parameter num / den.
int64_t SampleDiscreteGaussian(uint64_t num, uint64_t den, RandomSource& rng);

}  // namespace internal

// The discrete Gaussian N_Z(sigma^2): P[X = x] proportional to
// exp(-x^2 / (2 sigma^2)) over the integers.
//
// Immutable once created; copies share the precomputed pmf table, so
// instances are cheap to pass around and safe to use from several threads
// (each with its own RandomSource).
class DiscreteGaussian {
 public:
  // Numerator and denominator of sigma^2 must stay below 2^48 so the exact
  // sampler's intermediate values fit its fixed-width integers.
  static absl::StatusOr<DiscreteGaussian> Create(const Rational& sigma_squared);

  // sigma^2 = 1 / (2 rho): the ρ-zCDP calibration at unit L2 sensitivity.
  static absl::StatusOr<DiscreteGaussian> ForZcdp(const Rational& rho);

  const Rational& sigma_squared() const { return sigma_squared_; }
  double sigma() const { return sigma_; }

  // Support half-width used for all numerical queries: max(ceil(12 sigma), 50).
  int64_t window() const { return window_; }

  double Pmf(int64_t x) const;

  // P[X <= t].
  double Cdf(int64_t t) const;

  // P[X >= x].
  double UpperTail(int64_t x) const;

  // Smallest integer t with Cdf(t) >= p. Rejects p outside (0, 1).
  absl::StatusOr<int64_t> InverseCdf(double p) const;

  // Continuous-Gaussian bound P[Y >= m - 1] with Y ~ N(0, sigma^2), which
  // dominates P[X >= m] for every m >= 1. Rejects m < 1.
  absl::StatusOr<double> TailBound(int64_t m) const;

  // Variance by pmf summation over the window.
  double Variance() const;

  int64_t Sample(RandomSource& rng) const {
    return internal::SampleDiscreteGaussian(num_, den_, rng);
  }

 private:
  struct Tables {
    std::vector<double> pmf;    // pmf[x] for x in [0, window]
    std::vector<double> upper;  // upper[x] = P[X >= x] for x in [0, window]
  };

  DiscreteGaussian(Rational sigma_squared, uint64_t num, uint64_t den);

  Rational sigma_squared_;
  uint64_t num_;
  uint64_t den_;
  double sigma_;
  int64_t window_;
  std::shared_ptr<const Tables> tables_;
};

// Two-sided geometric distribution: P[X = x] proportional to
// exp(-epsilon |x|). This is the ε-DP counting noise at unit L1 sensitivity.
class TwoSidedGeometric {
 public:
  static absl::StatusOr<TwoSidedGeometric> Create(const Rational& epsilon);

  const Rational& epsilon() const { return epsilon_; }

  double Pmf(int64_t x) const;
  double Cdf(int64_t t) const;
  double UpperTail(int64_t x) const;
  absl::StatusOr<int64_t> InverseCdf(double p) const;
  double Variance() const;

  int64_t Sample(RandomSource& rng) const {
    return internal::SampleDiscreteLaplace(num_, den_, rng);
  }

 private:
  TwoSidedGeometric(Rational epsilon, uint64_t num, uint64_t den);

  Rational epsilon_;
  uint64_t num_;
  uint64_t den_;
  long double alpha_;  // exp(-epsilon)
};

// Standard normal helpers shared by the planner and postprocessing checks.
double StandardNormalCdf(double z);
double StandardNormalPdf(double z);

}  // namespace dptab

#endif  // DPTAB_NOISE_H_
