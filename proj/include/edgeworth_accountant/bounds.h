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

// Explicit finite-sample bounds on the error of the first-order Edgeworth
// approximation: a uniform bound valid for independent, non-identical steps,
// a refined O(1/m) bound for identical steps with a continuous law, and
// exponential tail bounds for sums of subsampled Gaussian and Laplace PLLRs.

#ifndef EDGEWORTH_ACCOUNTANT_BOUNDS_H_
#define EDGEWORTH_ACCOUNTANT_BOUNDS_H_

#include <cstdint>
#include <functional>

#include "absl/status/statusor.h"
#include "edgeworth_accountant/mechanisms.h"

namespace edgeworth_accountant {

// sup_{x > 0} x^{-3} |cos(x) - 1 + x^2 / 2|.
inline constexpr double kChi1 = 0.099162;
// theta / (2 pi) for the root theta in (0, 2 pi) of
// theta^2 + 2 theta sin(theta) + 6 (cos(theta) - 1) = 0.
inline constexpr double kT1Star = 0.635967;
// Constant of the bound |Psi(t)| <= kPsiBound / (2 pi |t|).
inline constexpr double kPsiBound = 1.0253;
inline constexpr double kDefaultSmoothingEps = 0.1;

class UniformBoundInputs {
 public:
  // `smoothing_eps` must lie in (0, 1/3); `stats` must be non-degenerate.
  static absl::StatusOr<UniformBoundInputs> Create(
      const CompositionStats& stats,
      double smoothing_eps = kDefaultSmoothingEps);
  // Builds inputs from the bare moment functionals, for arithmetic checks.
  static absl::StatusOr<UniformBoundInputs> FromFunctionals(
      int64_t m, double k3_tilde, double k4, double lambda3,
      bool has_nonzero_third_moment,
      double smoothing_eps = kDefaultSmoothingEps, double k3 = -1.0);

  int64_t m() const { return m_; }
  double k3() const { return k3_; }
  double k3_tilde() const { return k3_tilde_; }
  double k4() const { return k4_; }
  double lambda3() const { return lambda3_; }
  bool has_nonzero_third_moment() const { return has_nonzero_third_moment_; }
  double smoothing_eps() const { return smoothing_eps_; }

 private:
  UniformBoundInputs() = default;

  int64_t m_ = 0;
  double k3_ = 0.0;
  double k3_tilde_ = 0.0;
  double k4_ = 0.0;
  double lambda3_ = 0.0;
  bool has_nonzero_third_moment_ = false;
  double smoothing_eps_ = kDefaultSmoothingEps;
};

// The five nonnegative summands of r_{1,m}.
struct RemainderR1 {
  double smoothing = 0.0;
  double exponential = 0.0;
  double i32 = 0.0;
  double i33 = 0.0;
  double r1_integral = 0.0;

  double total() const {
    return smoothing + exponential + i32 + i33 + r1_integral;
  }
};

// 0.1995 K~3 / sqrt(m) + (0.031 K~3^2 + 0.195 K4 + 0.054 |l3| K~3
// + 0.038 l3^2) / m.
double UniformBoundLeadingTerms(const UniformBoundInputs& inputs);

absl::StatusOr<RemainderR1> ComputeRemainderR1(const UniformBoundInputs& inputs);

// Leading terms plus r_{1,m}: an upper bound on sup_x |F(x) - G_1(x)|.
absl::StatusOr<double> UniformBoundOrder1(const UniformBoundInputs& inputs);

// (1.0253 / pi) int_0^{u_eps} u e^{-u^2/2} R_{1,m}(u, eps) du, shared by both
// remainders.
absl::StatusOr<double> SmoothingRemainderIntegral(
    const UniformBoundInputs& inputs);

struct IidRefinedBound {
  double leading = 0.0;
  double cf_integral = 0.0;
  // Components of r_{2,m}.
  double r2_closed_form = 0.0;
  double i52 = 0.0;
  double i53 = 0.0;
  double i54 = 0.0;
  double j3 = 0.0;
  double j5 = 0.0;
  double r1_integral = 0.0;

  double r2() const {
    return r2_closed_form + i52 + i53 + i54 + j3 + j5 + r1_integral;
  }
  double total() const { return leading + cf_integral + r2(); }
};

// The O(1/m) bound for identical steps. `cf_modulus(t)` must return
// |f_{S_m}(t)|, the modulus of the characteristic function of the
// standardized sum. `stats` must come from a single distinct profile.
absl::StatusOr<IidRefinedBound> ComputeIidRefinedBound(
    const CompositionStats& stats, const std::function<double(double)>& cf_modulus,
    double smoothing_eps = kDefaultSmoothingEps);

// The two incomplete-Gamma closed forms used by the refined bound.
double IidTermI52(const UniformBoundInputs& inputs);
double IidTermI54(const UniformBoundInputs& inputs);

struct TailBoundParams {
  double a = 0.0;
  double a_plus = 0.0;
  double eta = 0.0;
  double tau_sq = 0.0;
};

// e(a) = int_a^inf (D(a) - D(xi)) phi(xi) dxi with
// D(xi) = log(p + (1 - p) exp(-(mu xi - mu^2 / 2))).
absl::StatusOr<double> TruncationExcess(const MechanismSpec& spec, double a);

// Solves e(a) = -E[X] / 2 on [0, 20]; returns 0 when e(0) is already below the
// target. Requires a subsampled Gaussian with 0 < p < 1 and mu > 0.
absl::StatusOr<double> ChooseTruncationPoint(const MechanismSpec& spec);

// Parameters of the sub-Gaussian bound at truncation point `a`. Returns an
// Unavailable status when eta(a) <= 0 or the mechanism is not admissible.
absl::StatusOr<TailBoundParams> GaussianTailParams(const MechanismSpec& spec,
                                                   double a);

// 2 exp(-(eps + m eta)^2 / (8 m tau^2)): an upper bound on P(sum X_i >= eps)
// for the primary-branch PLLRs.
double GaussianTailBound(const TailBoundParams& params, int64_t m,
                         double epsilon);
absl::StatusOr<double> GaussianTailBound(const MechanismSpec& spec, int64_t m,
                                         double epsilon, double a);

struct LaplaceTailParams {
  double eta = 0.0;
  double tau_sq = 0.0;
};

// Unavailable when mu = 0, p = 0 or eta <= 0.
absl::StatusOr<LaplaceTailParams> ComputeLaplaceTailParams(
    const MechanismSpec& spec);

// exp(-2 (eps + m eta)^2 / (m tau^2)) when eps + m eta >= 0, else 1: an upper
// bound on P(sum X_i >= eps) for both branches.
double LaplaceTailBound(const LaplaceTailParams& params, int64_t m,
                        double epsilon);
absl::StatusOr<double> LaplaceTailBound(const MechanismSpec& spec, int64_t m,
                                        double epsilon);

// Bound on |F(x) - G(x)| implied by 1 - F(x) in [0, tail] where `g_sf` is
// 1 - G(x).
double TailImpliedCdfError(double g_sf, double tail);

}  // namespace edgeworth_accountant

#endif  // EDGEWORTH_ACCOUNTANT_BOUNDS_H_
