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

// Small numerical toolkit shared by the accountant modules: standard normal
// functions, a checked wrapper around adaptive Gauss-Kronrod quadrature and a
// bracketed scalar root finder.

#ifndef EDGEWORTH_ACCOUNTANT_NUMERICS_H_
#define EDGEWORTH_ACCOUNTANT_NUMERICS_H_

#include <functional>
#include <string_view>

#include "absl/status/statusor.h"

namespace edgeworth_accountant {

double NormalPdf(double x);
double NormalCdf(double x);
// 1 - NormalCdf(x) without cancellation.
double NormalSf(double x);
// Returns z with NormalSf(z) = q, for q in (0, 1).
double NormalUpperQuantile(double q);

struct QuadratureTolerance {
  double absolute = 1e-12;
  double relative = 1e-10;
  int max_depth = 24;
};

// Adaptive 61-point Gauss-Kronrod integration of `f` over [a, b]. Infinite
// limits are accepted. Fails when the error estimate exceeds
// max(absolute, relative * |integral|); `what` names the integral in the error
// message.
absl::StatusOr<double> Integrate(const std::function<double(double)>& f,
                                 double a, double b, std::string_view what,
                                 const QuadratureTolerance& tolerance = {});

struct RootOptions {
  double x_tolerance = 1e-12;
  int max_iterations = 400;
};

// Finds a root of `f` in [lo, hi] where f(lo) and f(hi) have opposite signs
// (or one is zero). Bisection interleaved with secant steps; the bracket always
// shrinks.
absl::StatusOr<double> FindBracketedRoot(const std::function<double(double)>& f,
                                         double lo, double hi,
                                         const RootOptions& options = {});

}  // namespace edgeworth_accountant

#endif  // EDGEWORTH_ACCOUNTANT_NUMERICS_H_
