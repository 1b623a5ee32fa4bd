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
#include <limits>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "boost/math/special_functions/expint.hpp"
#include "boost/math/special_functions/gamma.hpp"
#include "edgeworth_accountant/numerics.h"

namespace edgeworth_accountant {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Exponents above this make the characteristic-function bound overflow.
constexpr double kMaxExponent = 600.0;

// u_eps = sqrt(2 eps) (m / K4)^{1/4}.
double SmoothingCutoff(const UniformBoundInputs& in) {
  return std::sqrt(2.0 * in.smoothing_eps()) *
         std::pow(static_cast<double>(in.m()) / in.k4(), 0.25);
}

// Exponent of the bound
// |f_{S_m}(u)| <= exp(-u^2/2 + chi1 u^3 K~3 / sqrt(m) + u^2 sqrt(K4) / (2 sqrt(m))).
double CfBoundExponent(const UniformBoundInputs& in, double u) {
  const double sqrt_m = std::sqrt(static_cast<double>(in.m()));
  return -0.5 * u * u + kChi1 * u * u * u * in.k3_tilde() / sqrt_m +
         u * u * std::sqrt(in.k4()) / (2.0 * sqrt_m);
}

// int_lo^hi u^2 e^{-u^2/2} du through the upper incomplete Gamma function.
double GaussianSecondMomentPiece(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  const double upper =
      std::isfinite(hi) ? boost::math::tgamma(1.5, 0.5 * hi * hi) : 0.0;
  return std::numbers::sqrt2 * (boost::math::tgamma(1.5, 0.5 * lo * lo) - upper);
}

// (1.0253 / pi) * int_lo^hi u^power exp(CfBoundExponent(u)) du, +inf on overflow.
absl::StatusOr<double> CfBoundMomentIntegral(const UniformBoundInputs& in,
                                              double lo, double hi,
                                              int power, std::string_view what) {
  if (!(hi > lo)) return 0.0;
  double peak = -kInf;
  constexpr int kProbe = 512;
  for (int i = 0; i <= kProbe; ++i) {
    peak = std::max(peak, CfBoundExponent(in, lo + (hi - lo) * i / kProbe));
  }
  if (peak > kMaxExponent) return kInf;
  auto value = Integrate(
      [&](double u) {
        return std::pow(u, power) * std::exp(CfBoundExponent(in, u));
      },
      lo, hi, what);
  if (!value.ok()) return value.status();
  return kPsiBound / kPi * *value;
}

// (1.0253 / pi) * int_lo^hi |f(t)| / t dt for a decaying modulus, integrating
// over doubling segments in log t until the modulus is negligible.
absl::StatusOr<double> ModulusIntegral(const std::function<double(double)>& f,
                                       double lo, double hi,
                                       std::string_view what) {
  if (!(hi > lo)) return 0.0;
  double total = 0.0;
  int quiet_segments = 0;
  for (double a = lo; a < hi;) {
    const double b = std::min(hi, 2.0 * a);
    QuadratureTolerance tolerance;
    tolerance.absolute = 1e-15;
    tolerance.relative = 1e-8;
    auto piece = Integrate([&](double v) { return std::abs(f(std::exp(v))); },
                           std::log(a), std::log(b), what, tolerance);
    if (!piece.ok()) return piece.status();
    total += *piece;
    if (*piece < 1e-17 && std::abs(f(b)) < 1e-17) {
      if (++quiet_segments >= 3) break;
    } else {
      quiet_segments = 0;
    }
    a = b;
  }
  return kPsiBound / kPi * total;
}

}  // namespace

absl::StatusOr<UniformBoundInputs> UniformBoundInputs::Create(
    const CompositionStats& stats, double smoothing_eps) {
  if (stats.degenerate) {
    return absl::FailedPreconditionError(
        "uniform bound is undefined for a degenerate composition");
  }
  return FromFunctionals(stats.m, stats.k3_tilde, stats.k4, stats.lambda3,
                         stats.has_nonzero_third_moment, smoothing_eps,
                         stats.k3);
}

absl::StatusOr<UniformBoundInputs> UniformBoundInputs::FromFunctionals(
    int64_t m, double k3_tilde, double k4, double lambda3,
    bool has_nonzero_third_moment, double smoothing_eps, double k3) {
  if (!(smoothing_eps > 0.0 && smoothing_eps < 1.0 / 3.0)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "smoothing_eps must lie in (0, 1/3), got %g", smoothing_eps));
  }
  if (m < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("m must be >= 1, got %d", m));
  }
  if (!(k3_tilde > 0.0) || !(k4 > 0.0) || !std::isfinite(k3_tilde) ||
      !std::isfinite(k4) || !std::isfinite(lambda3)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "moment functionals must be finite and positive (K~3=%g, K4=%g)",
        k3_tilde, k4));
  }
  UniformBoundInputs in;
  in.m_ = m;
  in.k3_tilde_ = k3_tilde;
  in.k3_ = k3 < 0.0 ? k3_tilde : k3;
  in.k4_ = k4;
  in.lambda3_ = lambda3;
  in.has_nonzero_third_moment_ = has_nonzero_third_moment;
  in.smoothing_eps_ = smoothing_eps;
  return in;
}

double UniformBoundLeadingTerms(const UniformBoundInputs& in) {
  const double m = static_cast<double>(in.m());
  const double k = in.k3_tilde();
  const double l3 = std::abs(in.lambda3());
  return 0.1995 * k / std::sqrt(m) +
         (0.031 * k * k + 0.195 * in.k4() + 0.054 * l3 * k + 0.038 * l3 * l3) /
             m;
}

absl::StatusOr<double> SmoothingRemainderIntegral(const UniformBoundInputs& in) {
  const double m = static_cast<double>(in.m());
  const double eps = in.smoothing_eps();
  const double k4m = in.k4() / m;
  const double l3 = std::abs(in.lambda3());
  const double indicator = in.has_nonzero_third_moment() ? 1.0 : 0.0;
  const double q = (1.0 - 3.0 * eps) * (1.0 - 3.0 * eps);
  const double p1 =
      (144.0 + 48.0 * eps + 4.0 * eps * eps +
       indicator * (96.0 * std::sqrt(2.0 * eps) + 32.0 * eps +
                    16.0 * std::numbers::sqrt2 * std::pow(eps, 1.5))) /
      576.0;
  const double e1 = std::exp(eps * eps * (1.0 / 6.0 + 2.0 * p1 / q));
  const double c = 1.0 / 24.0 + p1 / (2.0 * q);
  auto r1 = [&](double t) {
    const double u11 = std::pow(t, 6) / 24.0 * std::pow(k4m, 1.5) +
                       std::pow(t, 8) / 576.0 * k4m * k4m;
    const double u12 = indicator * (std::pow(t, 5) / 6.0 * std::pow(k4m, 1.25) +
                                    std::pow(t, 6) / 36.0 * std::pow(k4m, 1.5) +
                                    std::pow(t, 7) / 72.0 * std::pow(k4m, 1.75));
    return (u11 + u12) / (2.0 * q) +
           e1 * (std::pow(t, 8) * in.k4() * in.k4() / (2.0 * m * m) * c * c +
                 std::pow(t, 7) * l3 * in.k4() / (6.0 * std::pow(m, 1.5)) * c);
  };
  auto value = Integrate(
      [&](double u) { return u * std::exp(-0.5 * u * u) * r1(u); }, 0.0,
      SmoothingCutoff(in), "R1 smoothing integral");
  if (!value.ok()) return value.status();
  return kPsiBound / kPi * *value;
}

absl::StatusOr<RemainderR1> ComputeRemainderR1(const UniformBoundInputs& in) {
  const double m = static_cast<double>(in.m());
  const double sqrt_m = std::sqrt(m);
  const double k = in.k3_tilde();
  const double k_4 = k * k * k * k;
  const double l3 = std::abs(in.lambda3());
  RemainderR1 r;
  r.smoothing = (14.1961 + 67.0415) * k_4 / (16.0 * std::pow(kPi, 4) * m * m);
  r.exponential = l3 * std::exp(-2.0 * m * m / k_4) / (3.0 * kPi * sqrt_m);
  // Smoothing parameter T = 2 pi sqrt(m) / K~3 with t0 = 1 / pi.
  const double lo = SmoothingCutoff(in);
  const double hi = 2.0 * sqrt_m / k;
  if (hi > lo) {
    auto cf_part = CfBoundMomentIntegral(in, lo, hi, -1, "I32");
    if (!cf_part.ok()) return cf_part.status();
    auto gauss_part = Integrate(
        [](double u) { return std::exp(-0.5 * u * u) / u; }, lo, hi,
        "I32 Gaussian part");
    if (!gauss_part.ok()) return gauss_part.status();
    r.i32 = *cf_part + kPsiBound / kPi * *gauss_part;
    r.i33 = l3 / (6.0 * sqrt_m) * kPsiBound / kPi *
            GaussianSecondMomentPiece(lo, hi);
  }
  auto integral = SmoothingRemainderIntegral(in);
  if (!integral.ok()) return integral.status();
  r.r1_integral = *integral;
  return r;
}

absl::StatusOr<double> UniformBoundOrder1(const UniformBoundInputs& in) {
  auto r1 = ComputeRemainderR1(in);
  if (!r1.ok()) return r1.status();
  return UniformBoundLeadingTerms(in) + r1->total();
}

namespace {

double IidSmoothingT(const UniformBoundInputs& in) {
  const double m = static_cast<double>(in.m());
  const double k = in.k3_tilde();
  return 16.0 * std::pow(kPi, 4) * m * m / (k * k * k * k);
}

double IncompleteGammaPrefactor(const UniformBoundInputs& in) {
  return kPsiBound * std::abs(in.lambda3()) /
         (3.0 * kPi * std::numbers::sqrt2 *
          std::sqrt(static_cast<double>(in.m())));
}

}  // namespace

double IidTermI52(const UniformBoundInputs& in) {
  const double t = IidSmoothingT(in);
  const double lo = SmoothingCutoff(in);
  const double hi = std::pow(t, 0.25) / kPi;
  if (!(lo < hi)) return 0.0;
  const double m = static_cast<double>(in.m());
  return IncompleteGammaPrefactor(in) *
         (boost::math::tgamma(1.5, in.smoothing_eps() * std::sqrt(m / in.k4())) -
          boost::math::tgamma(1.5, std::sqrt(t) / (2.0 * kPi * kPi)));
}

double IidTermI54(const UniformBoundInputs& in) {
  const double t = IidSmoothingT(in);
  if (!(std::pow(t, 0.25) < t)) return 0.0;
  return IncompleteGammaPrefactor(in) *
         (boost::math::tgamma(1.5, std::sqrt(t) / (2.0 * kPi * kPi)) -
          boost::math::tgamma(1.5, t * t / (2.0 * kPi * kPi)));
}

absl::StatusOr<IidRefinedBound> ComputeIidRefinedBound(
    const CompositionStats& stats,
    const std::function<double(double)>& cf_modulus, double smoothing_eps) {
  if (stats.distinct_profiles != 1) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "refined bound requires identical steps, got %d distinct profiles",
        stats.distinct_profiles));
  }
  auto in = UniformBoundInputs::Create(stats, smoothing_eps);
  if (!in.ok()) return in.status();
  const double m = static_cast<double>(in->m());
  const double sqrt_m = std::sqrt(m);
  const double l3 = std::abs(in->lambda3());
  const double t = IidSmoothingT(*in);
  const double t14 = std::pow(t, 0.25);
  const double lo = SmoothingCutoff(*in);

  IidRefinedBound bound;
  bound.leading = (0.195 * in->k4() + 0.038 * l3 * l3) / m;
  bound.r2_closed_form = 1.2533 / t + 0.3334 * l3 / (t * sqrt_m) +
                         14.1961 / (t * t * t * t) +
                         l3 * std::exp(-t * t / (2.0 * kPi * kPi)) /
                             (3.0 * kPi * sqrt_m);
  bound.i52 = IidTermI52(*in);
  bound.i54 = IidTermI54(*in);
  if (lo < t14 / kPi) {
    auto i53 = CfBoundMomentIntegral(*in, lo, t14 / kPi, 2, "I53");
    if (!i53.ok()) return i53.status();
    bound.i53 = in->k3() / (6.0 * sqrt_m) * *i53;
  }
  auto j3 = ModulusIntegral(cf_modulus, t14 / kPi, kT1Star * t14, "J3");
  if (!j3.ok()) return j3.status();
  bound.j3 = *j3;
  const double j5_lo = t14 / kPi;
  const double j5_hi = t / kPi;
  if (j5_hi > j5_lo) {
    const double upper = 0.5 * j5_hi * j5_hi > 700.0
                             ? 0.0
                             : boost::math::expint(1, 0.5 * j5_hi * j5_hi);
    bound.j5 = kPsiBound / kPi * 0.5 *
               (boost::math::expint(1, 0.5 * j5_lo * j5_lo) - upper);
  }
  auto r1_integral = SmoothingRemainderIntegral(*in);
  if (!r1_integral.ok()) return r1_integral.status();
  bound.r1_integral = *r1_integral;
  auto cf_integral =
      ModulusIntegral(cf_modulus, kT1Star * t14, t, "characteristic function");
  if (!cf_integral.ok()) return cf_integral.status();
  bound.cf_integral = *cf_integral;
  return bound;
}

namespace {

absl::Status CheckGaussianTailAdmissible(const MechanismSpec& spec) {
  if (spec.kind() != MechanismKind::kSubsampledGaussian &&
      spec.kind() != MechanismKind::kPureGaussian) {
    return absl::InvalidArgumentError(
        "the Gaussian tail bound needs a Gaussian mechanism");
  }
  if (!(spec.p() > 0.0 && spec.p() < 1.0 && spec.mu() > 0.0)) {
    return absl::UnavailableError(absl::StrFormat(
        "Gaussian tail bound unavailable for p=%g, mu=%g (needs 0<p<1, mu>0)",
        spec.p(), spec.mu()));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> PrimaryMeanX(const MechanismSpec& spec) {
  auto profile = PllrMoments(spec, PllrBranch::kPrimary, PllrVariable::kX);
  if (!profile.ok()) return profile.status();
  return profile->mean;
}

}  // namespace

absl::StatusOr<double> TruncationExcess(const MechanismSpec& spec, double a) {
  if (absl::Status s = CheckGaussianTailAdmissible(spec); !s.ok()) return s;
  const double mu = spec.mu();
  const double p = spec.p();
  const double za = mu * a - 0.5 * mu * mu;
  // D(a) - D(xi) = log1p((1 - p) e^{-z_a} (1 - e^{-(z - z_a)}) /
  //                      (p + (1 - p) e^{-z})), free of cancellation.
  return Integrate(
      [&](double xi) {
        const double z = mu * xi - 0.5 * mu * mu;
        const double gap = -std::expm1(-(z - za));
        const double ratio = (1.0 - p) * gap /
                             (p * std::exp(za) + (1.0 - p) * std::exp(za - z));
        return std::log1p(ratio) * NormalPdf(xi);
      },
      a, std::max(a + 1.0, 40.0), "truncation excess e(a)");
}

absl::StatusOr<double> ChooseTruncationPoint(const MechanismSpec& spec) {
  if (absl::Status s = CheckGaussianTailAdmissible(spec); !s.ok()) return s;
  auto mean = PrimaryMeanX(spec);
  if (!mean.ok()) return mean.status();
  const double target = -0.5 * *mean;
  auto at_zero = TruncationExcess(spec, 0.0);
  if (!at_zero.ok()) return at_zero.status();
  if (*at_zero <= target) return 0.0;
  absl::Status failure;
  auto root = FindBracketedRoot(
      [&](double a) {
        auto e = TruncationExcess(spec, a);
        if (!e.ok()) {
          failure = e.status();
          return 0.0;
        }
        return *e - target;
      },
      0.0, 20.0);
  if (!failure.ok()) return failure;
  return root;
}

absl::StatusOr<TailBoundParams> GaussianTailParams(const MechanismSpec& spec,
                                                   double a) {
  if (absl::Status s = CheckGaussianTailAdmissible(spec); !s.ok()) return s;
  if (!(a >= 0.0) || !std::isfinite(a)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("truncation point must be >= 0, got %g", a));
  }
  auto mean = PrimaryMeanX(spec);
  if (!mean.ok()) return mean.status();
  auto excess = TruncationExcess(spec, a);
  if (!excess.ok()) return excess.status();
  const double mu = spec.mu();
  const double p = spec.p();
  TailBoundParams params;
  params.a = a;
  params.a_plus = NormalPdf(a) / NormalSf(a);
  params.eta = -(*mean + *excess);
  if (!(params.eta > 0.0)) {
    return absl::UnavailableError(absl::StrFormat(
        "Gaussian tail bound unavailable: eta(a=%g) = %g <= 0", a, params.eta));
  }
  const double gap = params.a_plus - a;
  const double range = std::log1p(p * std::expm1(mu * a - 0.5 * mu * mu)) +
                       mu * gap - std::log1p(-p);
  const double mass = NormalCdf(params.a_plus) - NormalCdf(a);
  // The printed third term has a negative denominator; its magnitude is used.
  const double third =
      mass > 0.0 && mass < 1.0
          ? std::abs(gap * gap * mu * mu / (2.0 * std::log(mass)))
          : 0.0;
  params.tau_sq = std::max({range * range / 4.0, mu * mu, third});
  return params;
}

double GaussianTailBound(const TailBoundParams& params, int64_t m,
                         double epsilon) {
  const double md = static_cast<double>(m);
  const double shift = epsilon + md * params.eta;
  return 2.0 * std::exp(-shift * shift / (8.0 * md * params.tau_sq));
}

absl::StatusOr<double> GaussianTailBound(const MechanismSpec& spec, int64_t m,
                                         double epsilon, double a) {
  if (m < 1) return absl::InvalidArgumentError("m must be >= 1");
  auto params = GaussianTailParams(spec, a);
  if (!params.ok()) return params.status();
  return GaussianTailBound(*params, m, epsilon);
}

absl::StatusOr<LaplaceTailParams> ComputeLaplaceTailParams(
    const MechanismSpec& spec) {
  if (spec.kind() != MechanismKind::kSubsampledLaplace) {
    return absl::InvalidArgumentError(
        "the Laplace tail bound needs a subsampled Laplace mechanism");
  }
  if (spec.is_identity()) {
    return absl::UnavailableError(
        "Laplace tail bound unavailable: PLLRs are identically zero (tau^2 = 0)");
  }
  auto primary = PllrMoments(spec, PllrBranch::kPrimary, PllrVariable::kX);
  if (!primary.ok()) return primary.status();
  auto inverse = PllrMoments(spec, PllrBranch::kInverse, PllrVariable::kX);
  if (!inverse.ok()) return inverse.status();
  const double p = spec.p();
  const double mu = spec.mu();
  LaplaceTailParams params;
  params.eta = -std::max(primary->mean, inverse->mean);
  const double width =
      std::log1p(p * std::expm1(mu)) - std::log1p(p * std::expm1(-mu));
  params.tau_sq = width * width;
  if (!(params.eta > 0.0)) {
    return absl::UnavailableError(absl::StrFormat(
        "Laplace tail bound unavailable: eta = %g <= 0", params.eta));
  }
  return params;
}

double LaplaceTailBound(const LaplaceTailParams& params, int64_t m,
                        double epsilon) {
  const double md = static_cast<double>(m);
  const double shift = epsilon + md * params.eta;
  if (shift < 0.0) return 1.0;
  return std::exp(-2.0 * shift * shift / (md * params.tau_sq));
}

absl::StatusOr<double> LaplaceTailBound(const MechanismSpec& spec, int64_t m,
                                        double epsilon) {
  if (m < 1) return absl::InvalidArgumentError("m must be >= 1");
  auto params = ComputeLaplaceTailParams(spec);
  if (!params.ok()) return params.status();
  return LaplaceTailBound(*params, m, epsilon);
}

double TailImpliedCdfError(double g_sf, double tail) {
  const double cap = std::clamp(tail, 0.0, 1.0);
  return std::max(std::abs(g_sf), std::abs(g_sf - cap));
}

}  // namespace edgeworth_accountant
