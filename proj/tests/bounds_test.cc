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


#include "edgeworth_accountant/bounds.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "boost/math/special_functions/gamma.hpp"
#include "edgeworth_accountant/edgeworth_series.h"
#include "edgeworth_accountant/mechanisms.h"
#include "edgeworth_accountant/numerics.h"
#include "edgeworth_accountant/oracle.h"
#include "gtest/gtest.h"

namespace edgeworth_accountant {
namespace {

constexpr double kPi = std::numbers::pi;

MechanismSpec Gaussian(double sigma, double p) {
  return *MechanismSpec::Create(MechanismKind::kSubsampledGaussian, 1.0 / sigma, p);
}

CompositionStats Stats(const MechanismSpec& spec, int64_t m) {
  auto profile = PllrMoments(spec, PllrBranch::kPrimary, PllrVariable::kX);
  EXPECT_TRUE(profile.ok());
  const WeightedProfile entry{*profile, m};
  return *ComposeStats({&entry, 1});
}

UniformBoundInputs Inputs(const CompositionStats& stats) {
  auto in = UniformBoundInputs::Create(stats);
  EXPECT_TRUE(in.ok()) << in.status();
  return *in;
}

TEST(ConstantsTest, MatchTheirDefinitions) {
  double sup = 0.0;
  for (double x = 1e-3; x <= 30.0; x += 1e-5) {
    sup = std::max(sup, std::abs(std::cos(x) - 1.0 + 0.5 * x * x) / (x * x * x));
  }
  EXPECT_NEAR(sup, kChi1, 1e-6);
  auto theta = FindBracketedRoot(
      [](double t) {
        return t * t + 2.0 * t * std::sin(t) + 6.0 * (std::cos(t) - 1.0);
      },
      3.0, 6.2);
  ASSERT_TRUE(theta.ok());
  EXPECT_NEAR(*theta / (2.0 * kPi), kT1Star, 1e-6);
}

TEST(UniformBoundTest, LeadingTermsArithmetic) {
  auto in = UniformBoundInputs::FromFunctionals(10000, 1.0, 1.0, 0.0, false);
  ASSERT_TRUE(in.ok());
  EXPECT_NEAR(UniformBoundLeadingTerms(*in), 0.0020176, 1e-12);
  auto total = UniformBoundOrder1(*in);
  auto r1 = ComputeRemainderR1(*in);
  ASSERT_TRUE(total.ok());
  ASSERT_TRUE(r1.ok());
  EXPECT_DOUBLE_EQ(*total, 0.0020176 + r1->total());
}

TEST(UniformBoundTest, ZeroLambda3DropsItsTerms) {
  const double k = 2.5, k4 = 7.0;
  const int64_t m = 400;
  auto flat = UniformBoundInputs::FromFunctionals(m, k, k4, 0.0, true);
  auto skew = UniformBoundInputs::FromFunctionals(m, k, k4, -0.5, true);
  ASSERT_TRUE(flat.ok());
  ASSERT_TRUE(skew.ok());
  EXPECT_DOUBLE_EQ(UniformBoundLeadingTerms(*flat),
                   0.1995 * k / 20.0 + (0.031 * k * k + 0.195 * k4) / 400.0);
  EXPECT_NEAR(UniformBoundLeadingTerms(*skew) - UniformBoundLeadingTerms(*flat),
              (0.054 * 0.5 * k + 0.038 * 0.25) / 400.0, 1e-16);
}

TEST(UniformBoundTest, RejectsBadInputs) {
  for (double eps : {0.0, -0.1, 1.0 / 3.0, 0.5}) {
    EXPECT_EQ(UniformBoundInputs::FromFunctionals(100, 1.0, 1.0, 0.0, false, eps)
                  .status()
                  .code(),
              absl::StatusCode::kInvalidArgument)
        << eps;
  }
  EXPECT_FALSE(UniformBoundInputs::FromFunctionals(0, 1.0, 1.0, 0.0, false).ok());
  EXPECT_FALSE(UniformBoundInputs::FromFunctionals(10, 0.0, 1.0, 0.0, false).ok());
  CompositionStats degenerate;
  degenerate.m = 3;
  degenerate.degenerate = true;
  EXPECT_EQ(UniformBoundInputs::Create(degenerate).status().code(),
            absl::StatusCode::kFailedPrecondition);
}

TEST(UniformBoundTest, RemainderSummandsAreNonnegative) {
  for (int64_t m : {10, 100, 10000, 1000000}) {
    for (double lambda3 : {0.0, 0.7}) {
      auto in = UniformBoundInputs::FromFunctionals(m, 1.8, 4.0, lambda3,
                                                    lambda3 != 0.0);
      auto r = ComputeRemainderR1(*in);
      ASSERT_TRUE(r.ok()) << r.status();
      EXPECT_GE(r->smoothing, 0.0);
      EXPECT_GE(r->exponential, 0.0);
      EXPECT_GE(r->i32, 0.0);
      EXPECT_GE(r->i33, 0.0);
      EXPECT_GE(r->r1_integral, 0.0);
    }
  }
}

TEST(UniformBoundTest, RemainderVanishesWithM) {
  const MechanismSpec spec = Gaussian(2.0, 0.01);
  std::vector<double> r1;
  std::vector<double> ratio;
  for (int64_t m : {100, 10000, 1000000}) {
    const UniformBoundInputs in = Inputs(Stats(spec, m));
    auto r = ComputeRemainderR1(in);
    ASSERT_TRUE(r.ok()) << r.status();
    r1.push_back(r->total());
    ratio.push_back(r->total() / UniformBoundLeadingTerms(in));
  }
  EXPECT_LT(r1[1], r1[0]);
  EXPECT_LT(r1[2], r1[1]);
  EXPECT_LT(ratio[1], ratio[0]);
  EXPECT_LT(ratio[2], ratio[1]);
  EXPECT_LT(ratio[2], 0.01);
}

TEST(UniformBoundTest, RemainderEventuallyNegligibleForHeavierSkew) {
  const MechanismSpec spec = Gaussian(0.8, 0.01);
  double previous = INFINITY;
  for (int64_t m : {1000000, 100000000}) {
    const UniformBoundInputs in = Inputs(Stats(spec, m));
    const double ratio = ComputeRemainderR1(in)->total() / UniformBoundLeadingTerms(in);
    EXPECT_LT(ratio, previous);
    previous = ratio;
  }
  EXPECT_LT(previous, 1e-3);
}

// Delta_{m,1} dominates the observed gap between the oracle CDF and the
// first-order series.
TEST(UniformBoundTest, DominatesOracleGap) {
  constexpr int64_t kM = 100000;
  const MechanismSpec spec = Gaussian(0.8, 0.4 / std::sqrt(static_cast<double>(kM)));
  const CompositionEntry entry{spec, kM};
  for (PllrVariable variable : {PllrVariable::kX, PllrVariable::kY}) {
    auto profile = PllrMoments(spec, PllrBranch::kPrimary, variable);
    const WeightedProfile weighted{*profile, kM};
    const CompositionStats stats = *ComposeStats({&weighted, 1});
    auto bound = UniformBoundOrder1(Inputs(stats));
    ASSERT_TRUE(bound.ok());
    auto oracle = OracleSumLaw({&entry, 1}, PllrBranch::kPrimary, variable,
                               Rounding::kNearest);
    ASSERT_TRUE(oracle.ok());
    auto series = EdgeworthSeries::Create(1, stats, variable, PllrBranch::kPrimary);
    double gap = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double x = stats.mean + stats.b * (-10.0 + 20.0 * i / 1999.0);
      gap = std::max(gap, std::abs(oracle->Cdf(x) - series->Cdf(x)));
    }
    EXPECT_LE(gap, *bound) << PllrVariableName(variable);
  }
}

TEST(IidRefinedBoundTest, IncompleteGammaClosedForms) {
  EXPECT_NEAR(boost::math::tgamma(1.5, 0.0), std::sqrt(kPi) / 2.0, 1e-15);
  auto in = UniformBoundInputs::FromFunctionals(50, 2.0, 3.0, 1.2, true);
  ASSERT_TRUE(in.ok());
  const double m = 50.0;
  const double t = 16.0 * std::pow(kPi, 4) * m * m / 16.0;
  const double prefactor = 1.2 / (3.0 * std::sqrt(m)) * kPsiBound / (2.0 * kPi);
  auto piece = [](double lo, double hi) {
    return *Integrate([](double u) { return u * u * std::exp(-0.5 * u * u); },
                      lo, hi, "u^2 gaussian");
  };
  const double lo52 = std::sqrt(2.0 * 0.1) * std::pow(m / 3.0, 0.25);
  ASSERT_LT(lo52, std::pow(t, 0.25) / kPi);
  EXPECT_NEAR(IidTermI52(*in), prefactor * piece(lo52, std::pow(t, 0.25) / kPi),
              1e-14);
  EXPECT_NEAR(IidTermI54(*in),
              prefactor * piece(std::pow(t, 0.25) / kPi, std::min(t / kPi, 60.0)),
              1e-14);
}

TEST(IidRefinedBoundTest, RequiresIdenticalSteps) {
  const MechanismSpec a = Gaussian(0.8, 0.01);
  const MechanismSpec b = Gaussian(1.0, 0.02);
  auto pa = PllrMoments(a, PllrBranch::kPrimary, PllrVariable::kX);
  auto pb = PllrMoments(b, PllrBranch::kPrimary, PllrVariable::kX);
  const std::vector<WeightedProfile> mixed = {{*pa, 10}, {*pb, 10}};
  auto stats = ComposeStats(mixed);
  auto bound = ComputeIidRefinedBound(*stats, [](double) { return 0.0; });
  EXPECT_EQ(bound.status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(IidRefinedBoundTest, DecaysLikeOneOverM) {
  const MechanismSpec spec = Gaussian(0.8, 0.01);
  auto law = PllrLaw(spec, PllrBranch::kPrimary, PllrVariable::kX);
  ASSERT_TRUE(law.ok());
  const double h = 1e-4;
  const auto [lo, hi] = law->EffectiveSupport(1e-16);
  const double origin = std::floor(lo / h) * h;
  auto step = DiscretizeLaw(*law, origin, h,
                            static_cast<size_t>(std::ceil((hi - origin) / h)) + 1,
                            Rounding::kNearest);
  ASSERT_TRUE(step.ok());
  std::vector<double> totals;
  for (int64_t m : {1000, 4000}) {
    auto bound = ComputeIidRefinedBound(Stats(spec, m), CfModulus(*step, m));
    ASSERT_TRUE(bound.ok()) << bound.status();
    EXPECT_GE(bound->cf_integral, 0.0);
    EXPECT_GE(bound->r2(), 0.0);
    totals.push_back(bound->total());
  }
  const double ratio = totals[1] / totals[0];
  EXPECT_GT(ratio, 0.2);
  EXPECT_LT(ratio, 0.35);
}

TEST(TruncationExcessTest, MatchesDirectQuadrature) {
  const MechanismSpec spec = Gaussian(1.0, 0.05);
  const double mu = spec.mu(), p = spec.p();
  auto d = [&](double xi) {
    return std::log(p + (1.0 - p) * std::exp(-(mu * xi - 0.5 * mu * mu)));
  };
  double previous = INFINITY;
  for (double a : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    auto direct = Integrate([&](double xi) { return (d(a) - d(xi)) * NormalPdf(xi); },
                            a, 40.0, "direct");
    auto excess = TruncationExcess(spec, a);
    ASSERT_TRUE(excess.ok());
    EXPECT_NEAR(*excess, *direct, 1e-10) << a;
    EXPECT_GE(*excess, 0.0);
    EXPECT_LT(*excess, previous);
    previous = *excess;
  }
}

TEST(GaussianTailTest, TruncationPointSolvesTheExcessEquation) {
  for (const MechanismSpec& spec : {Gaussian(1.0, 0.05), Gaussian(0.8, 0.01)}) {
    auto a = ChooseTruncationPoint(spec);
    ASSERT_TRUE(a.ok()) << a.status();
    auto mean = PllrMoments(spec, PllrBranch::kPrimary, PllrVariable::kX)->mean;
    ASSERT_GT(*a, 0.0);
    EXPECT_NEAR(*TruncationExcess(spec, *a), -0.5 * mean, 1e-10);
    auto params = GaussianTailParams(spec, *a);
    ASSERT_TRUE(params.ok()) << params.status();
    EXPECT_NEAR(params->eta, -0.5 * mean, 1e-10);
    EXPECT_GT(params->a_plus, params->a);
    EXPECT_GE(params->tau_sq, spec.mu() * spec.mu());
  }
}

TEST(GaussianTailTest, MillsRatioAtZero) {
  // eta(0) is negative for these mechanisms, so check the a = 0 Mills ratio
  // on a mechanism where the truncation excess is small.
  const MechanismSpec spec = Gaussian(0.3, 0.9);
  auto params = GaussianTailParams(spec, 0.0);
  if (params.ok()) {
    EXPECT_NEAR(params->a_plus, 0.7978845608028654, 1e-15);
  } else {
    EXPECT_EQ(params.status().code(), absl::StatusCode::kUnavailable);
  }
  EXPECT_NEAR(NormalPdf(0.0) / NormalSf(0.0), 0.7978845608028654, 1e-15);
}

TEST(GaussianTailTest, UnavailableAndInvalid) {
  EXPECT_EQ(GaussianTailParams(Gaussian(1.0, 0.05), 0.0).status().code(),
            absl::StatusCode::kUnavailable);
  EXPECT_EQ(GaussianTailParams(Gaussian(1.0, 1.0), 1.0).status().code(),
            absl::StatusCode::kUnavailable);
  EXPECT_EQ(GaussianTailParams(Gaussian(1.0, 0.0), 1.0).status().code(),
            absl::StatusCode::kUnavailable);
  auto laplace = MechanismSpec::Create(MechanismKind::kSubsampledLaplace, 1.0, 0.1);
  EXPECT_EQ(GaussianTailParams(*laplace, 1.0).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(GaussianTailParams(Gaussian(1.0, 0.05), -1.0).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(GaussianTailTest, MonotoneAndDecaying) {
  const MechanismSpec spec = Gaussian(1.0, 0.05);
  auto params = GaussianTailParams(spec, *ChooseTruncationPoint(spec));
  ASSERT_TRUE(params.ok());
  double previous = INFINITY;
  for (double eps = 0.0; eps <= 2000.0; eps += 5.0) {
    const double bound = GaussianTailBound(*params, 1000, eps);
    EXPECT_GE(bound, 0.0);
    EXPECT_LE(bound, previous);
    previous = bound;
  }
  EXPECT_LT(GaussianTailBound(*params, 1000, 2000.0), 1e-100);
  // With eps = r m the log bound is linear in m.
  const double r = 0.05;
  std::vector<double> per_step;
  for (int64_t m : {100, 1000, 10000}) {
    const double md = static_cast<double>(m);
    per_step.push_back(-std::log(GaussianTailBound(*params, m, r * md) / 2.0) / md);
  }
  EXPECT_NEAR(per_step[1] / per_step[0], 1.0, 1e-10);
  EXPECT_NEAR(per_step[2] / per_step[0], 1.0, 1e-10);
}

TEST(GaussianTailTest, DominatesMonteCarlo) {
  const MechanismSpec spec = Gaussian(1.0, 0.05);
  auto params = GaussianTailParams(spec, *ChooseTruncationPoint(spec));
  ASSERT_TRUE(params.ok());
  const std::vector<double> thresholds = {2.0, 5.0, 10.0};
  auto mc = McTails(spec, PllrBranch::kPrimary, PllrVariable::kX, 1000,
                    thresholds, 1'000'000, 11);
  ASSERT_TRUE(mc.ok());
  for (size_t i = 0; i < thresholds.size(); ++i) {
    EXPECT_LE((*mc)[i].estimate + 4.0 * (*mc)[i].std_error,
              GaussianTailBound(*params, 1000, thresholds[i]));
  }
}

TEST(LaplaceTailTest, DegenerateAndTrivialCap) {
  auto identity = MechanismSpec::Create(MechanismKind::kSubsampledLaplace, 0.0, 0.3);
  EXPECT_EQ(ComputeLaplaceTailParams(*identity).status().code(),
            absl::StatusCode::kUnavailable);
  auto spec = MechanismSpec::Create(MechanismKind::kSubsampledLaplace, 1.0, 0.1);
  auto params = ComputeLaplaceTailParams(*spec);
  ASSERT_TRUE(params.ok());
  const double width = std::log(1 - 0.1 + 0.1 * std::exp(1.0)) -
                       std::log(1 - 0.1 + 0.1 * std::exp(-1.0));
  EXPECT_NEAR(params->tau_sq, width * width, 1e-15);
  EXPECT_GT(params->eta, 0.0);
  EXPECT_EQ(LaplaceTailBound(*params, 500, -500.0 * params->eta), 1.0);
  EXPECT_EQ(ComputeLaplaceTailParams(Gaussian(1.0, 0.1)).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(LaplaceTailTest, DominatesMonteCarloOnBothBranches) {
  auto spec = MechanismSpec::Create(MechanismKind::kSubsampledLaplace, 1.0, 0.1);
  const std::vector<double> thresholds = {1.0, 3.0};
  for (PllrBranch branch : {PllrBranch::kPrimary, PllrBranch::kInverse}) {
    auto mc = McTails(*spec, branch, PllrVariable::kX, 500, thresholds,
                      1'000'000, 12);
    ASSERT_TRUE(mc.ok());
    for (size_t i = 0; i < thresholds.size(); ++i) {
      EXPECT_LE((*mc)[i].estimate + 4.0 * (*mc)[i].std_error,
                *LaplaceTailBound(*spec, 500, thresholds[i]));
    }
  }
}

TEST(TailImpliedCdfErrorTest, WorstCaseOverTheInterval) {
  EXPECT_DOUBLE_EQ(TailImpliedCdfError(0.3, 0.1), 0.3);
  EXPECT_DOUBLE_EQ(TailImpliedCdfError(0.01, 0.1), 0.09);
  EXPECT_DOUBLE_EQ(TailImpliedCdfError(-0.02, 0.1), 0.12);
  EXPECT_DOUBLE_EQ(TailImpliedCdfError(0.2, 5.0), 0.8);
}

}  // namespace
}  // namespace edgeworth_accountant
