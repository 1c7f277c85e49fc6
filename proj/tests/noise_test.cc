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
#include <map>

#include "gtest/gtest.h"
#include "oracles.h"

namespace dptab {
namespace {

using internal::WideUint;

// Frozen from a 30-digit summation of exp(-x^2 / (2 sigma^2)).
TEST(DiscreteGaussianTest, PmfMatchesFrozenValues) {
  auto one = DiscreteGaussian::Create(Rational(1));
  ASSERT_TRUE(one.ok());
  EXPECT_NEAR(one->Pmf(0), 0.398942278266861705, 1e-15);
  EXPECT_NEAR(one->Pmf(3), 0.00443184838822506563, 1e-16);
  EXPECT_NEAR(one->Pmf(-3), one->Pmf(3), 0);
  EXPECT_NEAR(one->Variance(), 0.999999788767728083, 1e-12);
  EXPECT_NEAR(one->Cdf(2), 0.995432828582196747, 1e-14);
  EXPECT_NEAR(one->Cdf(-3), 0.00456717141780325266, 1e-15);

  auto half = DiscreteGaussian::Create(Rational(1, 2));
  ASSERT_TRUE(half.ok());
  EXPECT_NEAR(half->Pmf(0), 0.564131226218842075, 1e-15);
  EXPECT_NEAR(half->Variance(), 0.498979130832820462, 1e-12);

  auto wide = DiscreteGaussian::Create(*ParseRational("31.47"));
  ASSERT_TRUE(wide.ok());
  EXPECT_NEAR(wide->Pmf(0), 0.0711150785975585822, 1e-15);
  EXPECT_NEAR(wide->Variance(), 31.47, 1e-9);
  EXPECT_NEAR(wide->Cdf(2), 0.672287810622936045, 1e-13);
}

TEST(DiscreteGaussianTest, PmfMatchesOracleOnGrid) {
  for (const char* s2 : {"0.3", "1", "4", "31.47", "625"}) {
    const Rational sigma_squared = *ParseRational(s2);
    auto dg = DiscreteGaussian::Create(sigma_squared);
    ASSERT_TRUE(dg.ok()) << s2;
    testing::DiscreteGaussianOracle oracle(ToDouble(sigma_squared));
    for (int64_t x = -3 * dg->window() / 4; x <= 3 * dg->window() / 4; ++x) {
      EXPECT_NEAR(dg->Pmf(x), static_cast<double>(oracle.Pmf(x)), 1e-15)
          << s2 << " x=" << x;
      EXPECT_NEAR(dg->Cdf(x), static_cast<double>(oracle.Cdf(x)), 1e-13)
          << s2 << " x=" << x;
    }
  }
}

TEST(DiscreteGaussianTest, CdfAndUpperTailAreComplementary) {
  auto dg = DiscreteGaussian::Create(Rational(9, 2));
  ASSERT_TRUE(dg.ok());
  for (int64_t t = -20; t <= 20; ++t) {
    EXPECT_NEAR(dg->Cdf(t) + dg->UpperTail(t + 1), 1.0, 1e-15);
  }
  EXPECT_EQ(dg->UpperTail(dg->window() + 1), 0.0);
  EXPECT_EQ(dg->Cdf(dg->window()), 1.0);
}

TEST(DiscreteGaussianTest, InverseCdfIsSmallestQualifyingPoint) {
  auto dg = DiscreteGaussian::Create(Rational(4));
  ASSERT_TRUE(dg.ok());
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.7, 0.95, 0.9999}) {
    auto t = dg->InverseCdf(p);
    ASSERT_TRUE(t.ok());
    EXPECT_GE(dg->Cdf(*t), p);
    EXPECT_LT(dg->Cdf(*t - 1), p);
  }
  EXPECT_EQ(*dg->InverseCdf(0.5), 0);
  EXPECT_FALSE(dg->InverseCdf(0).ok());
  EXPECT_FALSE(dg->InverseCdf(1).ok());
  EXPECT_FALSE(dg->InverseCdf(-0.5).ok());
}

// Thresholds at p = 0.9999 for sigma^2 = 9 / (1.8 rho), frozen from the
// 30-digit summation.
TEST(DiscreteGaussianTest, InverseCdfFrozenThresholds) {
  for (const auto& [rho, expected] :
       std::vector<std::pair<const char*, int64_t>>{
           {"0.008", 93}, {"0.159", 21}, {"0.543", 11}}) {
    const Rational sigma_squared =
        Rational(9) / (Rational(18, 10) * *ParseRational(rho));
    auto dg = DiscreteGaussian::Create(sigma_squared);
    ASSERT_TRUE(dg.ok());
    EXPECT_EQ(*dg->InverseCdf(0.9999), expected) << rho;
  }
}

TEST(DiscreteGaussianTest, TailBoundDominatesExactTail) {
  for (const char* s2 : {"1", "4", "31.47"}) {
    auto dg = DiscreteGaussian::Create(*ParseRational(s2));
    ASSERT_TRUE(dg.ok());
    for (int64_t m = 1; m <= 40; ++m) {
      EXPECT_GE(*dg->TailBound(m), dg->UpperTail(m)) << s2 << " m=" << m;
    }
  }
  auto dg = DiscreteGaussian::Create(Rational(1));
  EXPECT_FALSE(dg->TailBound(0).ok());
}

TEST(DiscreteGaussianTest, CreateRejectsBadScales) {
  EXPECT_FALSE(DiscreteGaussian::Create(Rational(0)).ok());
  EXPECT_FALSE(DiscreteGaussian::Create(Rational(-1)).ok());
  EXPECT_FALSE(DiscreteGaussian::Create(Rational(BigInt(1) << 50, 3)).ok());
  EXPECT_FALSE(DiscreteGaussian::ForZcdp(Rational(0)).ok());
  auto dg = DiscreteGaussian::ForZcdp(Rational(1, 2));
  ASSERT_TRUE(dg.ok());
  EXPECT_EQ(dg->sigma_squared(), Rational(1));
}

TEST(DiscreteGaussianTest, SamplesAreSymmetricWithRightVariance) {
  auto dg = DiscreteGaussian::Create(Rational(4));
  ASSERT_TRUE(dg.ok());
  RandomSource rng(11, 0);
  constexpr int kSamples = 200000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < kSamples; ++i) {
    const double x = static_cast<double>(dg->Sample(rng));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / kSamples;
  EXPECT_NEAR(mean, 0, 5 * std::sqrt(4.0 / kSamples));
  EXPECT_NEAR(sum_sq / kSamples, 4.0, 0.04);
}

TEST(DiscreteGaussianTest, SamplerPassesChiSquareAtSmallScale) {
  const Rational sigma_squared(3, 7);
  auto dg = DiscreteGaussian::Create(sigma_squared);
  ASSERT_TRUE(dg.ok());
  testing::DiscreteGaussianOracle oracle(3.0L / 7);
  RandomSource rng(3, 3);
  constexpr int64_t kSamples = 100000;
  std::map<int64_t, int64_t> observed;
  std::map<int64_t, double> p;
  for (int64_t x = -6; x <= 6; ++x) p[x] = static_cast<double>(oracle.Pmf(x));
  for (int64_t i = 0; i < kSamples; ++i) ++observed[dg->Sample(rng)];
  int dof = 0;
  const double stat = testing::ChiSquare(observed, p, kSamples, &dof);
  EXPECT_LT(stat, testing::ChiSquareCritical(dof, 1e-3));
}

TEST(BernoulliExpTest, MatchesExpectedRate) {
  RandomSource rng(17, 0);
  for (const auto& [num, den] :
       std::vector<std::pair<int, int>>{{0, 1}, {1, 3}, {1, 1}, {5, 2}}) {
    constexpr int kTrials = 100000;
    int hits = 0;
    for (int i = 0; i < kTrials; ++i) {
      hits += internal::BernoulliExp(WideUint(num), WideUint(den), rng);
    }
    const double p = std::exp(-static_cast<double>(num) / den);
    EXPECT_NEAR(static_cast<double>(hits) / kTrials, p,
                5 * std::sqrt(p * (1 - p) / kTrials) + 1e-9)
        << num << "/" << den;
  }
}

TEST(BernoulliFractionTest, MatchesRate) {
  RandomSource rng(19, 0);
  constexpr int kTrials = 100000;
  int hits = 0;
  for (int i = 0; i < kTrials; ++i) {
    hits += internal::BernoulliFraction(WideUint(2), WideUint(7), rng);
  }
  EXPECT_NEAR(hits / double{kTrials}, 2.0 / 7, 5 * std::sqrt(0.204 / kTrials));
}

TEST(TwoSidedGeometricTest, ClosedFormsMatchSummation) {
  auto g = TwoSidedGeometric::Create(Rational(1, 2));
  ASSERT_TRUE(g.ok());
  // Frozen: Var = 2a / (1 - a)^2 and pmf(0) = (1 - a) / (1 + a), a = e^-0.5.
  EXPECT_NEAR(g->Variance(), 7.83539617806552753, 1e-12);
  EXPECT_NEAR(g->Pmf(0), 0.244918662403709129, 1e-15);
  double total = 0, cdf = 0;
  for (int64_t x = -200; x <= 200; ++x) total += g->Pmf(x);
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (int64_t t = -10; t <= 10; ++t) {
    cdf = 0;
    for (int64_t x = -200; x <= t; ++x) cdf += g->Pmf(x);
    EXPECT_NEAR(g->Cdf(t), cdf, 1e-12) << t;
    EXPECT_NEAR(g->UpperTail(t), 1 - g->Cdf(t - 1), 1e-12) << t;
  }
  auto t = g->InverseCdf(0.99);
  ASSERT_TRUE(t.ok());
  EXPECT_GE(g->Cdf(*t), 0.99);
  EXPECT_LT(g->Cdf(*t - 1), 0.99);
  EXPECT_FALSE(TwoSidedGeometric::Create(Rational(0)).ok());
}

TEST(TwoSidedGeometricTest, SamplesHaveRightVariance) {
  auto g = TwoSidedGeometric::Create(Rational(1, 2));
  ASSERT_TRUE(g.ok());
  RandomSource rng(23, 0);
  constexpr int kSamples = 200000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < kSamples; ++i) {
    const double x = static_cast<double>(g->Sample(rng));
    sum += x;
    sum_sq += x * x;
  }
  EXPECT_NEAR(sum / kSamples, 0, 5 * std::sqrt(7.835 / kSamples));
  EXPECT_NEAR(sum_sq / kSamples / 7.83539617806552753, 1.0, 0.03);
}

TEST(StandardNormalTest, KnownValues) {
  EXPECT_NEAR(StandardNormalCdf(0), 0.5, 1e-15);
  EXPECT_NEAR(StandardNormalCdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(StandardNormalPdf(0), 0.3989422804014327, 1e-15);
}

}  // namespace
}  // namespace dptab
