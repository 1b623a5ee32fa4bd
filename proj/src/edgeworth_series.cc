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

#include "edgeworth_accountant/edgeworth_series.h"

#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "edgeworth_accountant/numerics.h"

namespace edgeworth_accountant {

double HermitePolynomial(int n, double x) {
  if (n == 0) return 1.0;
  double previous = 1.0;
  double current = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * current - k * previous;
    previous = current;
    current = next;
  }
  return current;
}

absl::StatusOr<EdgeworthSeries> EdgeworthSeries::Create(
    int order, const CompositionStats& stats, PllrVariable variable,
    PllrBranch branch) {
  if (order < 0 || order > kMaxOrder) {
    return absl::InvalidArgumentError(
        absl::StrFormat("Edgeworth order must be in [0, %d], got %d",
                        kMaxOrder, order));
  }
  if (stats.m < 1) {
    return absl::InvalidArgumentError("composition statistics are empty");
  }
  return EdgeworthSeries(order, stats, variable, branch);
}

EdgeworthSeries::EdgeworthSeries(int order, const CompositionStats& stats,
                                 PllrVariable variable, PllrBranch branch)
    : order_(order), stats_(stats), variable_(variable), branch_(branch) {
  const double m = static_cast<double>(stats.m);
  kappa3_ = stats.lambda3 / std::sqrt(m);
  kappa4_ = stats.lambda4 / m;
  kappa5_ = stats.lambda5 / (m * std::sqrt(m));
}

double EdgeworthSeries::Correction(double x) const {
  if (order_ == 0) return 0.0;
  double p = kappa3_ / 6.0 * HermitePolynomial(2, x);
  if (order_ >= 2) {
    p += kappa4_ / 24.0 * HermitePolynomial(3, x) +
         kappa3_ * kappa3_ / 72.0 * HermitePolynomial(5, x);
  }
  if (order_ >= 3) {
    p += kappa5_ / 120.0 * HermitePolynomial(4, x) +
         kappa3_ * kappa4_ / 144.0 * HermitePolynomial(6, x) +
         kappa3_ * kappa3_ * kappa3_ / 1296.0 * HermitePolynomial(8, x);
  }
  return p;
}

double EdgeworthSeries::StandardizedCdf(double x) const {
  if (order_ == 0) return NormalCdf(x);
  return NormalCdf(x) - NormalPdf(x) * Correction(x);
}

double EdgeworthSeries::StandardizedSf(double x) const {
  if (order_ == 0) return NormalSf(x);
  return NormalSf(x) + NormalPdf(x) * Correction(x);
}

double EdgeworthSeries::StandardizedDensity(double x) const {
  double shifted = 0.0;
  if (order_ >= 1) shifted += kappa3_ / 6.0 * HermitePolynomial(3, x);
  if (order_ >= 2) {
    shifted += kappa4_ / 24.0 * HermitePolynomial(4, x) +
               kappa3_ * kappa3_ / 72.0 * HermitePolynomial(6, x);
  }
  if (order_ >= 3) {
    shifted += kappa5_ / 120.0 * HermitePolynomial(5, x) +
               kappa3_ * kappa4_ / 144.0 * HermitePolynomial(7, x) +
               kappa3_ * kappa3_ * kappa3_ / 1296.0 * HermitePolynomial(9, x);
  }
  return NormalPdf(x) * (1.0 + shifted);
}

double EdgeworthSeries::Cdf(double x) const {
  if (stats_.degenerate) return x >= stats_.mean ? 1.0 : 0.0;
  return StandardizedCdf((x - stats_.mean) / stats_.b);
}

double EdgeworthSeries::Sf(double x) const {
  if (stats_.degenerate) return x >= stats_.mean ? 0.0 : 1.0;
  return StandardizedSf((x - stats_.mean) / stats_.b);
}

}  // namespace edgeworth_accountant
