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

#include <algorithm>
#include <cmath>
#include <string>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "boost/math/quadrature/gauss_kronrod.hpp"
#include "boost/math/special_functions/erf.hpp"

namespace edgeworth_accountant {

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi *
                                   std::numbers::sqrt2);
}

double NormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double NormalSf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double NormalUpperQuantile(double q) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

absl::StatusOr<double> Integrate(const std::function<double(double)>& f,
                                 double a, double b, std::string_view what,
                                 const QuadratureTolerance& tolerance) {
  if (a == b) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  double value = 0.0;
  try {
    value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, tolerance.max_depth, tolerance.relative, &error, &l1);
  } catch (const std::exception& e) {
    return absl::InternalError(
        absl::StrFormat("quadrature for %s failed: %s", std::string(what), e.what()));
  }
  const double allowed =
      std::max(tolerance.absolute, tolerance.relative * l1);
  if (!std::isfinite(value) || !(error <= allowed)) {
    return absl::InternalError(absl::StrFormat(
        "quadrature for %s did not converge on [%g, %g]: value %.17g, "
        "error estimate %g > %g",
        std::string(what), a, b, value, error, allowed));
  }
  return value;
}

absl::StatusOr<double> FindBracketedRoot(const std::function<double(double)>& f,
                                         double lo, double hi,
                                         const RootOptions& options) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (!std::isfinite(f_lo) || !std::isfinite(f_hi) ||
      std::signbit(f_lo) == std::signbit(f_hi)) {
    return absl::InternalError(absl::StrFormat(
        "root not bracketed: f(%.17g) = %g, f(%.17g) = %g", lo, f_lo, hi,
        f_hi));
  }
  bool secant_turn = true;
  for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
    if (hi - lo <= options.x_tolerance) break;
    double x = 0.5 * (lo + hi);
    if (secant_turn) {
      const double candidate = hi - f_hi * (hi - lo) / (f_hi - f_lo);
      const double margin = 1e-3 * (hi - lo);
      if (candidate > lo + margin && candidate < hi - margin) x = candidate;
    }
    secant_turn = !secant_turn;
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (!std::isfinite(fx)) {
      return absl::InternalError(
          absl::StrFormat("non-finite function value at %.17g", x));
    }
    if (std::signbit(fx) == std::signbit(f_lo)) {
      lo = x;
      f_lo = fx;
    } else {
      hi = x;
      f_hi = fx;
    }
  }
  return std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
}

}  // namespace edgeworth_accountant
