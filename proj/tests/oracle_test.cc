// Copyright 2026 The Edgeworth Accountant Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "edgeworth_accountant/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "edgeworth_accountant/mechanisms.h"
#include "edgeworth_accountant/numerics.h"
#include "gtest/gtest.h"

namespace edgeworth_accountant {
namespace {

MechanismSpec Gaussian(double sigma, double p) {
  return *MechanismSpec::Create(MechanismKind::kSubsampledGaussian, 1.0 / sigma, p);
}

PllrDistribution Law(const MechanismSpec& spec, PllrVariable variable,
                     PllrBranch branch = PllrBranch::kPrimary) {
  auto law = PllrLaw(spec, branch, variable);
  EXPECT_TRUE(law.ok()) << law.status();
  return *law;
}

// Standard normal shifted to mean -1/2: the X law of a pure Gaussian step.
GridDensity HalfShiftedNormalGrid(double h, size_t n) {
  auto spec = MechanismSpec::Create(MechanismKind::kPureGaussian, 1.0, 1.0);
  const PllrDistribution law = Law(*spec, PllrVariable::kX);
  const double lo = -0.5 - 0.5 * h * static_cast<double>(n);
  return *DiscretizeLaw(law, lo, h, n, Rounding::kNearest);
}

TEST(GridDensityTest, Validation) {
  EXPECT_FALSE(GridDensity::Create(0.0, 1.0, {}).ok());
  EXPECT_FALSE(GridDensity::Create(0.0, 0.0, {1.0}).ok());
  EXPECT_FALSE(GridDensity::Create(0.0, 1.0, {0.5, -0.1}).ok());
  auto grid = GridDensity::Create(1.0, 0.5, {0.25, 0.5, 0.25});
  ASSERT_TRUE(grid.ok());
  EXPECT_DOUBLE_EQ(grid->Mean(), 1.5);
  EXPECT_DOUBLE_EQ(grid->Variance(), 0.125);
  EXPECT_DOUBLE_EQ(grid->Cdf(0.75), 0.0);
  EXPECT_DOUBLE_EQ(grid->Cdf(1.25), 0.25);
  EXPECT_DOUBLE_EQ(grid->Cdf(1.5), 0.5);
  EXPECT_DOUBLE_EQ(grid->Sf(1.5), 0.5);
  EXPECT_DOUBLE_EQ(grid->Cdf(3.0), 1.0);
}

TEST(DiscretizeTest, StepCdfMatchesLawAtCellEdges) {
  const MechanismSpec spec = Gaussian(0.8, 0.3);
  const PllrDistribution law = Law(spec, PllrVariable::kY);
  const double h = 1e-3;
  const auto [lo, hi] = law.EffectiveSupport(1e-16);
  const size_t n = static_cast<size_t>(std::ceil((hi - lo) / h)) + 1;
  auto grid = DiscretizeLaw(law, lo, h, n, Rounding::kNearest);
  ASSERT_TRUE(grid.ok());
  EXPECT_NEAR(grid->TotalMass(), 1.0, 1e-12);
  double sup = 0.0;
  for (size_t k = 0; k + 1 < n; k += 7) {
    const double edge = grid->point(k) + 0.5 * h;
    sup = std::max(sup, std::abs(grid->Cdf(edge) - law.Cdf(edge)));
  }
  EXPECT_LT(sup, 1e-8);
}

TEST(DiscretizeTest, RoundingDirectionsBracketNearest) {
  const PllrDistribution law = Law(Gaussian(1.0, 0.1), PllrVariable::kX);
  const double h = 1e-2;
  const size_t n = 2048;
  const double lo = -5.0;
  auto down = DiscretizeLaw(law, lo, h, n, Rounding::kDown);
  auto nearest = DiscretizeLaw(law, lo, h, n, Rounding::kNearest);
  auto up = DiscretizeLaw(law, lo, h, n, Rounding::kUp);
  ASSERT_TRUE(down.ok() && nearest.ok() && up.ok());
  EXPECT_LT(down->Mean(), nearest->Mean());
  EXPECT_LT(nearest->Mean(), up->Mean());
  EXPECT_NEAR(up->Mean() - down->Mean(), h, 1e-9);
  EXPECT_FALSE(DiscretizeLaw(law, lo, 0.0, n, Rounding::kNearest).ok());
  EXPECT_FALSE(DiscretizeLaw(law, lo, h, 0, Rounding::kNearest).ok());
}

TEST(ConvolveTest, SingleFoldIsIdentity) {
  const GridDensity step = HalfShiftedNormalGrid(1e-2, 4096);
  auto out = ConvolveMFold(step, 1);
  ASSERT_TRUE(out.ok());
  double sup = 0.0;
  for (double x = -8.0; x <= 8.0; x += 0.013) {
    sup = std::max(sup, std::abs(out->Cdf(x) - step.Cdf(x)));
  }
  EXPECT_LT(sup, 1e-12);
}

TEST(ConvolveTest, GaussianClosure) {
  const GridDensity step = HalfShiftedNormalGrid(1e-3, size_t{1} << 15);
  auto out = ConvolveMFold(step, 4);
  ASSERT_TRUE(out.ok()) << out.status();
  double sup = 0.0;
  for (double x = -12.0; x <= 8.0; x += 0.0037) {
    sup = std::max(sup, std::abs(out->Cdf(x) - NormalCdf((x + 2.0) / 2.0)));
  }
  EXPECT_LT(sup, 1e-6);
  EXPECT_NEAR(out->Mean(), -2.0, 1e-9);
}

TEST(ConvolveTest, TiltedTailsResolveMassBelowRoundoff) {
  const GridDensity step = HalfShiftedNormalGrid(1e-3, size_t{1} << 16);
  ConvolutionOptions options;
  options.tail_tilt = 6.0;
  auto tilted = ConvolveMFold(step, 4, options);
  auto plain = ConvolveMFold(step, 4);
  ASSERT_TRUE(tilted.ok() && plain.ok());
  for (double z : {-7.5, 7.5}) {
    // Snap to a cell edge, where the grid CDF carries no interpolation error.
    const double edge = tilted->lo() - 0.5 * 1e-3;
    const double x = edge + 1e-3 * std::round((-2.0 + 2.0 * z - edge) / 1e-3);
    z = (x + 2.0) / 2.0;
    const double exact = z > 0 ? NormalSf(z) : NormalCdf(z);
    const double got = z > 0 ? tilted->Sf(x) : tilted->Cdf(x);
    EXPECT_NEAR(got / exact, 1.0, 1e-5) << z;
  }
  double sup = 0.0;
  for (double x = -12.0; x <= 8.0; x += 0.0037) {
    sup = std::max(sup, std::abs(tilted->Cdf(x) - plain->Cdf(x)));
  }
  EXPECT_LT(sup, 1e-12);
}

TEST(ConvolveTest, Errors) {
  const GridDensity step = HalfShiftedNormalGrid(1e-2, 4096);
  EXPECT_EQ(ConvolveMFold(step, 0).status().code(),
            absl::StatusCode::kInvalidArgument);
  auto odd = GridDensity::Create(0.0, 1.0, {0.2, 0.5, 0.3});
  EXPECT_EQ(ConvolveMFold(*odd, 3).status().code(),
            absl::StatusCode::kInvalidArgument);
  const GridDensity other = HalfShiftedNormalGrid(2e-2, 4096);
  const GridTerm mismatched[] = {{&step, 1}, {&other, 1}};
  EXPECT_EQ(ConvolveComposition(mismatched).status().code(),
            absl::StatusCode::kInvalidArgument);
  ConvolutionOptions tiny;
  tiny.max_grid_size = 4096;
  EXPECT_EQ(ConvolveMFold(step, 1000, tiny).status().code(),
            absl::StatusCode::kResourceExhausted);
}

TEST(ConvolveTest, WindowGrowsForWideSums) {
  const GridDensity step = HalfShiftedNormalGrid(1e-2, 2048);
  auto out = ConvolveMFold(step, 400);
  ASSERT_TRUE(out.ok()) << out.status();
  EXPECT_GT(out->size(), step.size());
  EXPECT_NEAR(out->TotalMass(), 1.0, 1e-9);
  EXPECT_NEAR(out->Cdf(-200.0), 0.5, 1e-4);
}

TEST(ConvolveTest, DensityRatioPropagatesToSums) {
  const MechanismSpec spec = Gaussian(1.0, 0.5);
  const PllrDistribution x = Law(spec, PllrVariable::kX);
  const PllrDistribution y = Law(spec, PllrVariable::kY);
  // Within a cell e^t varies by a factor e^h, so h bounds the cell ratio
  // error.
  const double h = 1e-4;
  const size_t n = size_t{1} << 20;
  const double lo = x.g_lower() + 0.5 * h - 100000 * h;
  auto gx = DiscretizeLaw(x, lo, h, n, Rounding::kNearest);
  auto gy = DiscretizeLaw(y, lo, h, n, Rounding::kNearest);
  ASSERT_TRUE(gx.ok() && gy.ok());
  constexpr int64_t kM = 100;
  ConvolutionOptions options;
  options.tail_tilt = 6.0;
  auto sx = ConvolveMFold(*gx, kM, options);
  auto sy = ConvolveMFold(*gy, kM, options);
  ASSERT_TRUE(sx.ok() && sy.ok());
  const int64_t offset = std::llround((sy->lo() - sx->lo()) / h);
  int checked = 0;
  double worst = 0.0;
  for (size_t k = 0; k < sy->size(); ++k) {
    const int64_t j = static_cast<int64_t>(k) + offset;
    if (j < 0 || j >= static_cast<int64_t>(sx->size())) continue;
    const double fy = sy->mass()[k] / h;
    const double fx = sx->mass()[j] / h;
    if (fy <= 1e-12 || fx <= 1e-12) continue;
    const double t = sy->point(k);
    worst = std::max(worst, std::abs(fy / (std::exp(t) * fx) - 1.0));
    ++checked;
  }
  EXPECT_GT(checked, 1000);
  EXPECT_LT(worst, 1e-4);
}

TEST(OracleSumLawTest, NormalizationUpToLargeM) {
  const MechanismSpec spec = Gaussian(0.8, 0.01);
  for (int64_t m : {1, 1000, 100000}) {
    const CompositionEntry entry{spec, m};
    for (PllrVariable variable : {PllrVariable::kX, PllrVariable::kY}) {
      auto law = OracleSumLaw({&entry, 1}, PllrBranch::kPrimary, variable,
                              Rounding::kNearest);
      ASSERT_TRUE(law.ok()) << law.status();
      EXPECT_NEAR(law->TotalMass(), 1.0, 1e-6) << m;
      for (double mass : law->mass()) ASSERT_GE(mass, 0.0);
    }
  }
}

TEST(OracleSumLawTest, MeanAndVarianceMatchMoments) {
  const MechanismSpec spec = Gaussian(0.8, 0.01);
  constexpr int64_t kM = 1000;
  const CompositionEntry entry{spec, kM};
  for (PllrVariable variable : {PllrVariable::kX, PllrVariable::kY}) {
    auto law = OracleSumLaw({&entry, 1}, PllrBranch::kPrimary, variable,
                            Rounding::kNearest);
    auto profile = PllrMoments(spec, PllrBranch::kPrimary, variable);
    ASSERT_TRUE(law.ok() && profile.ok());
    EXPECT_NEAR(law->Mean(), kM * profile->mean, 1e-6);
    EXPECT_NEAR(law->Variance() / (kM * profile->variance()), 1.0, 1e-3);
  }
}

TEST(OracleSumLawTest, AgreesWithMonteCarloAtQuantiles) {
  const MechanismSpec spec = Gaussian(0.8, 0.01);
  constexpr int64_t kM = 1000;
  constexpr int64_t kSamples = 1'000'000;
  const CompositionEntry entry{spec, kM};
  auto law = OracleSumLaw({&entry, 1}, PllrBranch::kPrimary, PllrVariable::kX,
                          Rounding::kNearest);
  ASSERT_TRUE(law.ok());
  auto profile = PllrMoments(spec, PllrBranch::kPrimary, PllrVariable::kX);
  const double mean = kM * profile->mean;
  const double sd = std::sqrt(kM * profile->variance());
  std::vector<double> thresholds;
  for (int i = 0; i < 20; ++i) thresholds.push_back(mean + sd * (-2.5 + 5.0 * i / 19.0));
  auto mc = McTails(spec, PllrBranch::kPrimary, PllrVariable::kX, kM, thresholds,
                    kSamples, 31);
  ASSERT_TRUE(mc.ok());
  for (size_t i = 0; i < thresholds.size(); ++i) {
    const double tail = law->Sf(thresholds[i]);
    EXPECT_LE(std::abs(tail - (*mc)[i].estimate), 4.0 * (*mc)[i].std_error)
        << thresholds[i];
  }
}

TEST(OracleAccountantTest, PrivacyCurveAgreesWithMonteCarlo) {
  const MechanismSpec spec = Gaussian(0.8, 0.01);
  constexpr int64_t kM = 1000;
  const CompositionEntry entry{spec, kM};
  auto oracle = OracleAccountant::Create({&entry, 1});
  ASSERT_TRUE(oracle.ok());
  const std::vector<double> eps = {0.0, 0.25, 0.5, 1.0};
  std::vector<double> sum(eps.size(), 0.0), sum_sq(eps.size(), 0.0);
  constexpr int64_t kSamples = 1'000'000;
  auto status = SampleSums(spec, PllrBranch::kPrimary, PllrVariable::kY, kM,
                           kSamples, 32, [&](std::span<const double> block) {
                             for (double y : block) {
                               for (size_t i = 0; i < eps.size(); ++i) {
                                 const double v = std::max(0.0, 1.0 - std::exp(eps[i] - y));
                                 sum[i] += v;
                                 sum_sq[i] += v * v;
                               }
                             }
                           });
  ASSERT_TRUE(status.ok());
  double previous = 1.0;
  for (size_t i = 0; i < eps.size(); ++i) {
    const double mean = sum[i] / kSamples;
    const double se = std::sqrt((sum_sq[i] / kSamples - mean * mean) / kSamples);
    const OracleDelta delta = oracle->Delta(eps[i]);
    EXPECT_LE(std::abs(delta.estimate - mean), 3.0 * se) << eps[i];
    EXPECT_LE(delta.lower, delta.estimate);
    EXPECT_LE(delta.estimate, delta.upper);
    EXPECT_LT(delta.estimate, previous);
    previous = delta.estimate;
  }
}

TEST(OracleAccountantTest, IdentityCompositionIsDegenerate) {
  const CompositionEntry entry{Gaussian(1.0, 0.0), 50};
  auto oracle = OracleAccountant::Create({&entry, 1});
  ASSERT_TRUE(oracle.ok());
  EXPECT_TRUE(oracle->degenerate());
  EXPECT_EQ(oracle->Delta(0.5).upper, 0.0);
  EXPECT_FALSE(OracleAccountant::Create({}).ok());
}

TEST(GridPrivacyCurveTest, PointMassAndLargeEpsilon) {
  auto grid = GridDensity::Create(2.0, 1.0, {1.0});
  const GridPrivacyCurve curve(*grid);
  EXPECT_NEAR(curve.Delta(0.0), 1.0 - std::exp(-2.0), 1e-15);
  EXPECT_NEAR(curve.Delta(1.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_EQ(curve.Delta(2.0), 0.0);
  EXPECT_EQ(curve.Delta(50.0), 0.0);
}

TEST(CfModulusTest, GaussianStepAndGeneralProperties) {
  const GridDensity step = HalfShiftedNormalGrid(1e-3, size_t{1} << 15);
  const auto cf = CfModulus(step, 1);
  EXPECT_EQ(cf(0.0), 1.0);
  for (double t = -10.0; t <= 10.0; t += 0.05) {
    EXPECT_NEAR(cf(t), std::exp(-0.5 * t * t), 1e-8) << t;
  }
  const GridDensity sum_step = HalfShiftedNormalGrid(1e-3, size_t{1} << 15);
  const auto cf4 = CfModulus(sum_step, 4);
  EXPECT_NEAR(cf4(1.0), std::exp(-0.5), 1e-8);

  const PllrDistribution law = Law(Gaussian(0.8, 0.05), PllrVariable::kX);
  const double h = 1e-3;
  const auto [lo, hi] = law.EffectiveSupport(1e-14);
  auto grid = DiscretizeLaw(law, lo, h, static_cast<size_t>((hi - lo) / h) + 2,
                            Rounding::kNearest);
  ASSERT_TRUE(grid.ok());
  const auto modulus = CfModulus(*grid, 100);
  for (int i = 0; i < 10000; ++i) {
    const double value = modulus(-50.0 + 100.0 * i / 9999.0);
    ASSERT_GE(value, 0.0);
    ASSERT_LE(value, 1.0);
  }
}

TEST(MonteCarloTest, TrivialThresholdsAndMedian) {
  auto pure = MechanismSpec::Create(MechanismKind::kPureGaussian, 1.0, 1.0);
  const double thresholds[] = {-std::numeric_limits<double>::infinity(), -0.5};
  auto mc = McTails(*pure, PllrBranch::kPrimary, PllrVariable::kX, 1, thresholds,
                    100000, 5);
  ASSERT_TRUE(mc.ok());
  EXPECT_EQ((*mc)[0].estimate, 1.0);
  EXPECT_LE(std::abs((*mc)[1].estimate - 0.5), 4.0 * (*mc)[1].std_error);
  EXPECT_GT((*mc)[1].std_error, 0.0);
}

TEST(MonteCarloTest, PreconditionsAndDeterminism) {
  const MechanismSpec spec = Gaussian(1.0, 0.05);
  EXPECT_EQ(McTail(spec, PllrBranch::kPrimary, PllrVariable::kX, 10, 0.0, 9999, 1)
                .status()
                .code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(McTail(spec, PllrBranch::kPrimary, PllrVariable::kX, 0, 0.0, 10000, 1).ok());
  auto a = McTail(spec, PllrBranch::kPrimary, PllrVariable::kX, 10, 0.0, 20000, 9);
  auto b = McTail(spec, PllrBranch::kPrimary, PllrVariable::kX, 10, 0.0, 20000, 9);
  auto c = McTail(spec, PllrBranch::kPrimary, PllrVariable::kX, 10, 0.0, 20000, 10);
  ASSERT_TRUE(a.ok() && b.ok() && c.ok());
  EXPECT_EQ(a->estimate, b->estimate);
  EXPECT_NE(a->estimate, c->estimate);
}

TEST(MonteCarloTest, IndependentOfThreadCount) {
  const MechanismSpec spec = Gaussian(1.0, 0.05);
  setenv("EA_NUM_THREADS", "1", 1);
  ASSERT_EQ(WorkerCount(), 1);
  auto one = McTail(spec, PllrBranch::kPrimary, PllrVariable::kY, 20, 0.1, 50000, 4);
  setenv("EA_NUM_THREADS", "4", 1);
  auto many = McTail(spec, PllrBranch::kPrimary, PllrVariable::kY, 20, 0.1, 50000, 4);
  unsetenv("EA_NUM_THREADS");
  ASSERT_TRUE(one.ok() && many.ok());
  EXPECT_EQ(one->estimate, many->estimate);
}

}  // namespace
}  // namespace edgeworth_accountant
