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

#ifndef EDGEWORTH_ACCOUNTANT_EDGEWORTH_SERIES_H_
#define EDGEWORTH_ACCOUNTANT_EDGEWORTH_SERIES_H_

#include "absl/status/statusor.h"
#include "edgeworth_accountant/mechanisms.h"

namespace edgeworth_accountant {

// Edgeworth approximation of orders 0..3 to the CDF of a sum of independent
// PLLRs. With kappa_r = lambda_{r,m} / m^{(r-2)/2} the standardized series is
//
//   E_0(x) = Phi(x)
//   E_1(x) = E_0(x) - phi(x) kappa_3 / 6 He_2(x)
//   E_2(x) = E_1(x) - phi(x) [kappa_4 / 24 He_3(x) + kappa_3^2 / 72 He_5(x)]
//   E_3(x) = E_2(x) - phi(x) [kappa_5 / 120 He_4(x)
//                             + kappa_3 kappa_4 / 144 He_6(x)
//                             + kappa_3^3 / 1296 He_8(x)]
//
// Values are the raw series and may leave [0, 1].
class EdgeworthSeries {
 public:
  static constexpr int kMaxOrder = 3;

  static absl::StatusOr<EdgeworthSeries> Create(int order,
                                                const CompositionStats& stats,
                                                PllrVariable variable,
                                                PllrBranch branch);

  int order() const { return order_; }
  const CompositionStats& stats() const { return stats_; }
  PllrVariable variable() const { return variable_; }
  PllrBranch branch() const { return branch_; }

  // E_{m,k}(x) and 1 - E_{m,k}(x) for the standardized sum. The complement is
  // evaluated without cancellation for large x.
  double StandardizedCdf(double x) const;
  double StandardizedSf(double x) const;
  // Derivative of StandardizedCdf.
  double StandardizedDensity(double x) const;

  // G(x) = E((x - M_m) / B_m). For a degenerate composition this is the step
  // function 1{x >= M_m}.
  double Cdf(double x) const;
  double Sf(double x) const;

 private:
  EdgeworthSeries(int order, const CompositionStats& stats,
                  PllrVariable variable, PllrBranch branch);
  // The polynomial P(x) with E(x) = Phi(x) - phi(x) P(x).
  double Correction(double x) const;

  int order_;
  CompositionStats stats_;
  PllrVariable variable_;
  PllrBranch branch_;
  double kappa3_ = 0.0;
  double kappa4_ = 0.0;
  double kappa5_ = 0.0;
};

// Probabilists' Hermite polynomial He_n(x), n >= 0.
double HermitePolynomial(int n, double x);

}  // namespace edgeworth_accountant

#endif  // EDGEWORTH_ACCOUNTANT_EDGEWORTH_SERIES_H_
