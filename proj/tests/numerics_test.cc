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


#include "edgeworth_accountant/numerics.h"

#include <cmath>
#include <numbers>

#include "gtest/gtest.h"

namespace edgeworth_accountant {
namespace {

TEST(NormalTest, KnownValues) {
  EXPECT_DOUBLE_EQ(NormalCdf(0.0), 0.5);
  EXPECT_NEAR(NormalCdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(NormalCdf(-1.96), 0.024997895148220435, 1e-15);
  EXPECT_NEAR(NormalPdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-16);
}

TEST(NormalTest, SurvivalIsAccurateInTheTail) {
  // Phi(-30) to 16 digits.
  EXPECT_NEAR(NormalSf(30.0) / 4.906713927148187e-198, 1.0, 1e-12);
  for (double x : {-5.0, -1.0, 0.3, 2.0, 8.0}) {
    EXPECT_NEAR(NormalCdf(x) + NormalSf(x), 1.0, 1e-15);
  }
}

TEST(NormalTest, UpperQuantileInvertsSurvival) {
  for (double q : {1e-300, 1e-12, 0.015, 0.3, 0.5, 0.9}) {
    EXPECT_NEAR(NormalSf(NormalUpperQuantile(q)) / q, 1.0, 1e-10) << q;
  }
  EXPECT_NEAR(NormalUpperQuantile(0.025), 1.959963984540054, 1e-12);
}

TEST(IntegrateTest, SmoothIntegrands) {
  auto sine = Integrate([](double x) { return std::sin(x); }, 0.0,
                        std::numbers::pi, "sine");
  ASSERT_TRUE(sine.ok()) << sine.status();
  EXPECT_NEAR(*sine, 2.0, 1e-13);

  auto gauss = Integrate([](double x) { return NormalPdf(x); }, -12.0, 12.0,
                         "gauss");
  ASSERT_TRUE(gauss.ok());
  EXPECT_NEAR(*gauss, 1.0, 1e-13);

  auto empty = Integrate([](double) { return 1.0; }, 3.0, 3.0, "empty");
  ASSERT_TRUE(empty.ok());
  EXPECT_EQ(*empty, 0.0);
}

TEST(IntegrateTest, ReportsNonConvergenceWithName) {
  QuadratureTolerance tight;
  tight.absolute = 1e-15;
  tight.relative = 1e-15;
  tight.max_depth = 1;
  auto result = Integrate([](double x) { return std::sin(1.0 / x); }, 1e-4,
                          1.0, "wiggle", tight);
  ASSERT_FALSE(result.ok());
  EXPECT_EQ(result.status().code(), absl::StatusCode::kInternal);
  EXPECT_NE(result.status().message().find("wiggle"), std::string::npos);
}

TEST(FindBracketedRootTest, ConvergesToTolerance) {
  auto root = FindBracketedRoot([](double x) { return x * x - 2.0; }, 0.0, 2.0);
  ASSERT_TRUE(root.ok());
  EXPECT_NEAR(*root, std::numbers::sqrt2, 1e-12);

  auto decreasing = FindBracketedRoot(
      [](double x) { return std::exp(-x) - 0.25; }, 0.0, 10.0);
  ASSERT_TRUE(decreasing.ok());
  EXPECT_NEAR(*decreasing, std::log(4.0), 1e-12);
}

TEST(FindBracketedRootTest, EndpointRoots) {
  auto root = FindBracketedRoot([](double x) { return x - 1.0; }, 1.0, 2.0);
  ASSERT_TRUE(root.ok());
  EXPECT_EQ(*root, 1.0);
}

TEST(FindBracketedRootTest, RejectsUnbracketed) {
  auto root = FindBracketedRoot([](double x) { return x * x + 1.0; }, -1.0, 1.0);
  EXPECT_FALSE(root.ok());
  auto nan = FindBracketedRoot([](double) { return std::nan(""); }, 0.0, 1.0);
  EXPECT_FALSE(nan.ok());
}

}  // namespace
}  // namespace edgeworth_accountant
