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

#include "edgeworth_accountant/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "edgeworth_accountant/numerics.h"

namespace edgeworth_accountant {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Half-width of the integration domain on the Gaussian base axis.
constexpr double kGaussianDomain = 12.0;

double LaplacePdf(double x) { return 0.5 * std::exp(-std::abs(x)); }
double LaplaceCdf(double x) {
  return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
}
double LaplaceSf(double x) {
  return x > 0.0 ? 0.5 * std::exp(-x) : 1.0 - 0.5 * std::exp(x);
}

// log(1 - p + p e^z), accurate for small p and for large z.
double LogMixture(double p, double z) {
  if (p == 1.0) return z;
  if (z > 30.0) return z + std::log(p) + std::log1p((1.0 - p) * std::exp(-z) / p);
  return std::log1p(p * std::expm1(z));
}

// Solves LogMixture(p, z) = u for z.
double InverseLogMixture(double p, double u) {
  if (p == 1.0) return u;
  if (u < 1.0) return std::log(std::expm1(u) + p) - std::log(p);
  return u + std::log1p(-(1.0 - p) * std::exp(-u)) - std::log(p);
}

double InverseLogMixtureDerivative(double p, double u) {
  if (p == 1.0) return 1.0;
  return 1.0 / (1.0 - (1.0 - p) * std::exp(-u));
}

}  // namespace

std::string_view MechanismKindName(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kSubsampledGaussian:
      return "subsampled-gaussian";
    case MechanismKind::kSubsampledLaplace:
      return "subsampled-laplace";
    case MechanismKind::kPureGaussian:
      return "gaussian";
  }
  return "unknown";
}

std::string_view PllrBranchName(PllrBranch branch) {
  return branch == PllrBranch::kPrimary ? "primary" : "inverse";
}

std::string_view PllrVariableName(PllrVariable variable) {
  return variable == PllrVariable::kX ? "X" : "Y";
}

absl::StatusOr<MechanismSpec> MechanismSpec::Create(MechanismKind kind,
                                                    double mu, double p) {
  if (!std::isfinite(mu) || mu < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrFormat("mu must be finite and >= 0, got %g", mu));
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("p must lie in [0, 1], got %g", p));
  }
  if (kind == MechanismKind::kPureGaussian && p != 1.0) {
    return absl::InvalidArgumentError(
        absl::StrFormat("the pure Gaussian mechanism requires p = 1, got %g", p));
  }
  return MechanismSpec(kind, mu, p);
}

bool MechanismSpec::SupportsBranch(PllrBranch branch) const {
  return branch == PllrBranch::kPrimary ||
         kind_ != MechanismKind::kPureGaussian;
}

std::vector<PllrBranch> MechanismSpec::branches() const {
  if (kind_ == MechanismKind::kPureGaussian) return {PllrBranch::kPrimary};
  return {PllrBranch::kPrimary, PllrBranch::kInverse};
}

double PllrDistribution::Transform(double base) const {
  if (family_ == BaseFamily::kGaussian) {
    return LogMixture(p_, mu_ * base - 0.5 * mu_ * mu_);
  }
  return LogMixture(p_, std::clamp(2.0 * base - mu_, -mu_, mu_));
}

double PllrDistribution::InverseTransform(double value) const {
  const double z = InverseLogMixture(p_, value);
  if (family_ == BaseFamily::kGaussian) return (z + 0.5 * mu_ * mu_) / mu_;
  return 0.5 * (z + mu_);
}

double PllrDistribution::InverseTransformDerivative(double value) const {
  const double dz = InverseLogMixtureDerivative(p_, value);
  return family_ == BaseFamily::kGaussian ? dz / mu_ : 0.5 * dz;
}

double PllrDistribution::BaseDensity(double base) const {
  const double w = shift_weight_;
  if (family_ == BaseFamily::kGaussian) {
    double density = (1.0 - w) * NormalPdf(base);
    if (w > 0.0) density += w * NormalPdf(base - mu_);
    return density;
  }
  double density = (1.0 - w) * LaplacePdf(base);
  if (w > 0.0) density += w * LaplacePdf(base - mu_);
  return density;
}

double PllrDistribution::BaseCdf(double base) const {
  const double w = shift_weight_;
  if (family_ == BaseFamily::kGaussian) {
    double value = (1.0 - w) * NormalCdf(base);
    if (w > 0.0) value += w * NormalCdf(base - mu_);
    return value;
  }
  double value = (1.0 - w) * LaplaceCdf(base);
  if (w > 0.0) value += w * LaplaceCdf(base - mu_);
  return value;
}

double PllrDistribution::BaseSf(double base) const {
  const double w = shift_weight_;
  if (family_ == BaseFamily::kGaussian) {
    double value = (1.0 - w) * NormalSf(base);
    if (w > 0.0) value += w * NormalSf(base - mu_);
    return value;
  }
  double value = (1.0 - w) * LaplaceSf(base);
  if (w > 0.0) value += w * LaplaceSf(base - mu_);
  return value;
}

double PllrDistribution::g_lower() const {
  if (family_ == BaseFamily::kGaussian) {
    return p_ == 1.0 ? -kInf : std::log1p(-p_);
  }
  return LogMixture(p_, -mu_);
}

double PllrDistribution::g_upper() const {
  if (family_ == BaseFamily::kGaussian) return kInf;
  return LogMixture(p_, mu_);
}

double PllrDistribution::GCdf(double u, bool inclusive) const {
  const double lo = g_lower();
  const double hi = g_upper();
  if (family_ == BaseFamily::kGaussian) {
    if (u <= lo) return 0.0;
    if (u == kInf) return 1.0;
    return BaseCdf(InverseTransform(u));
  }
  if (u < lo || (u == lo && !inclusive)) return 0.0;
  if (u > hi || (u == hi && inclusive)) return 1.0;
  return BaseCdf(std::clamp(InverseTransform(u), 0.0, mu_));
}

double PllrDistribution::GSf(double u, bool inclusive) const {
  const double lo = g_lower();
  const double hi = g_upper();
  if (family_ == BaseFamily::kGaussian) {
    if (u <= lo) return 1.0;
    if (u == kInf) return 0.0;
    return BaseSf(InverseTransform(u));
  }
  if (u < lo || (u == lo && inclusive)) return 1.0;
  if (u > hi || (u == hi && !inclusive)) return 0.0;
  return BaseSf(std::clamp(InverseTransform(u), 0.0, mu_));
}

double PllrDistribution::Density(double t) const {
  if (point_mass_) return 0.0;
  const double u = sign_ * t;
  if (!(u > g_lower() && u < g_upper())) return 0.0;
  return BaseDensity(InverseTransform(u)) * InverseTransformDerivative(u);
}

double PllrDistribution::Cdf(double t) const {
  if (point_mass_) return t >= 0.0 ? 1.0 : 0.0;
  if (sign_ > 0) return GCdf(t, /*inclusive=*/true);
  return GSf(-t, /*inclusive=*/true);
}

double PllrDistribution::Sf(double t) const {
  if (point_mass_) return t < 0.0 ? 1.0 : 0.0;
  if (sign_ > 0) return GSf(t, /*inclusive=*/false);
  return GCdf(-t, /*inclusive=*/false);
}

double PllrDistribution::support_lower() const {
  if (point_mass_) return 0.0;
  return sign_ > 0 ? g_lower() : -g_upper();
}

double PllrDistribution::support_upper() const {
  if (point_mass_) return 0.0;
  return sign_ > 0 ? g_upper() : -g_lower();
}

std::pair<double, double> PllrDistribution::EffectiveSupport(double tail) const {
  if (point_mass_) return {0.0, 0.0};
  if (family_ == BaseFamily::kLaplace) return {support_lower(), support_upper()};
  const double z = NormalUpperQuantile(0.5 * tail);
  const double base_lo = -z;
  const double base_hi = (shift_weight_ > 0.0 ? mu_ : 0.0) + z;
  const double g_lo = Transform(base_lo);
  const double g_hi = Transform(base_hi);
  if (sign_ > 0) return {g_lo, g_hi};
  return {-g_hi, -g_lo};
}

absl::StatusOr<std::pair<PllrDistribution, PllrDistribution>> PllrDensityPair(
    const MechanismSpec& spec, PllrBranch branch) {
  if (!spec.SupportsBranch(branch)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("mechanism %s has no %s branch",
                        std::string(MechanismKindName(spec.kind())),
                        std::string(PllrBranchName(branch))));
  }
  PllrDistribution x;
  x.family_ = spec.kind() == MechanismKind::kSubsampledLaplace
                  ? PllrDistribution::BaseFamily::kLaplace
                  : PllrDistribution::BaseFamily::kGaussian;
  x.mu_ = spec.mu();
  x.p_ = spec.p();
  x.point_mass_ = spec.is_identity();
  PllrDistribution y = x;
  // Primary: X = g(xi), xi ~ P and Y = g(zeta), zeta ~ Q.
  // Inverse: X = -g(zeta), zeta ~ Q and Y = -g(xi), xi ~ P.
  const double mixture_weight = spec.p();
  if (branch == PllrBranch::kPrimary) {
    x.shift_weight_ = 0.0;
    y.shift_weight_ = mixture_weight;
  } else {
    x.shift_weight_ = mixture_weight;
    y.shift_weight_ = 0.0;
    x.sign_ = -1;
    y.sign_ = -1;
  }
  for (PllrDistribution* d : {&x, &y}) {
    if (d->point_mass_) {
      d->atoms_ = {{0.0, 1.0}};
      continue;
    }
    if (d->family_ != PllrDistribution::BaseFamily::kLaplace) continue;
    Atom low{d->g_lower(), d->BaseCdf(0.0)};
    Atom high{d->g_upper(), d->BaseSf(d->mu_)};
    if (d->sign_ > 0) {
      d->atoms_ = {low, high};
    } else {
      d->atoms_ = {{-high.location, high.mass}, {-low.location, low.mass}};
    }
  }
  return std::make_pair(std::move(x), std::move(y));
}

absl::StatusOr<PllrDistribution> PllrLaw(const MechanismSpec& spec,
                                         PllrBranch branch,
                                         PllrVariable variable) {
  auto pair = PllrDensityPair(spec, branch);
  if (!pair.ok()) return pair.status();
  return variable == PllrVariable::kX ? pair->first : pair->second;
}

namespace {

// E[psi(V)] as a sum over atoms plus integrals on the base axis. `splits` are
// extra base-axis breakpoints (kinks of psi after composition with g).
absl::StatusOr<double> Expectation(const PllrDistribution& law,
                                   const std::function<double(double)>& psi,
                                   std::vector<double> splits,
                                   const std::string& what) {
  double total = 0.0;
  for (const Atom& atom : law.atoms()) total += atom.mass * psi(atom.location);
  std::vector<double> breaks;
  if (law.family() == PllrDistribution::BaseFamily::kLaplace) {
    breaks = {0.0, law.mu()};
  } else {
    const double hi =
        (law.shift_weight() > 0.0 ? law.mu() : 0.0) + kGaussianDomain;
    breaks = {-kGaussianDomain, 0.0, hi};
    if (law.shift_weight() > 0.0) breaks.push_back(law.mu());
  }
  const double lo_edge = *std::min_element(breaks.begin(), breaks.end());
  const double hi_edge = *std::max_element(breaks.begin(), breaks.end());
  for (double s : splits) {
    if (s > lo_edge && s < hi_edge) breaks.push_back(s);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const int sign = law.sign();
  auto integrand = [&](double base) {
    return psi(sign * law.Transform(base)) * law.BaseDensity(base);
  };
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    auto piece = Integrate(integrand, breaks[i], breaks[i + 1], what);
    if (!piece.ok()) return piece.status();
    total += *piece;
  }
  return total;
}

PllrMomentProfile GaussianProfile(double mean, double variance) {
  PllrMomentProfile profile;
  const double sd = std::sqrt(variance);
  const double abs_first = sd * std::sqrt(2.0 / std::numbers::pi);
  profile.mean = mean;
  profile.symmetric = true;
  profile.central_moments = {variance, 0.0, 3.0 * variance * variance, 0.0,
                             15.0 * variance * variance * variance};
  profile.abs_central_moments = {2.0 * variance * abs_first,
                                 3.0 * variance * variance};
  profile.abs_first = abs_first;
  profile.cumulants = {0.0, 0.0, 0.0};
  return profile;
}

}  // namespace

absl::StatusOr<PllrMomentProfile> PllrMoments(const MechanismSpec& spec,
                                              PllrBranch branch,
                                              PllrVariable variable) {
  auto law = PllrLaw(spec, branch, variable);
  if (!law.ok()) return law.status();
  PllrMomentProfile profile;
  if (law->is_point_mass()) {
    profile.point_mass = true;
    profile.symmetric = true;
  } else if (spec.kind() != MechanismKind::kSubsampledLaplace &&
             spec.p() == 1.0) {
    // Without subsampling the Gaussian PLLR is exactly N(-+mu^2/2, mu^2).
    const double mu = spec.mu();
    const double half = 0.5 * mu * mu;
    profile = GaussianProfile(variable == PllrVariable::kX ? -half : half,
                              mu * mu);
  } else {
    const std::string tag = absl::StrFormat(
        "%s %s %s (mu=%g, p=%g)", std::string(MechanismKindName(spec.kind())),
        std::string(PllrBranchName(branch)),
        std::string(PllrVariableName(variable)), spec.mu(),
        spec.p());
    auto mean = Expectation(*law, [](double v) { return v; }, {},
                            "mean of " + tag);
    if (!mean.ok()) return mean.status();
    const double mu1 = *mean;
    // Base-axis point where the integrand |v - mean| has its kink.
    std::vector<double> kink;
    const double g_target = law->sign() * mu1;
    if (g_target > law->g_lower() && g_target < law->g_upper()) {
      kink.push_back(law->InverseTransform(g_target));
    }
    for (int order = 2; order <= 6; ++order) {
      auto moment = Expectation(
          *law, [mu1, order](double v) { return std::pow(v - mu1, order); },
          kink, absl::StrFormat("central moment %d of %s", order, tag));
      if (!moment.ok()) return moment.status();
      profile.central_moments[order - 2] = *moment;
    }
    auto abs1 = Expectation(
        *law, [mu1](double v) { return std::abs(v - mu1); }, kink,
        "absolute first moment of " + tag);
    if (!abs1.ok()) return abs1.status();
    auto abs3 = Expectation(
        *law,
        [mu1](double v) {
          const double d = std::abs(v - mu1);
          return d * d * d;
        },
        kink, "absolute third moment of " + tag);
    if (!abs3.ok()) return abs3.status();
    profile.mean = mu1;
    profile.abs_first = *abs1;
    profile.abs_central_moments = {*abs3, profile.central_moments[2]};
    const double g2 = profile.central_moments[0];
    const double g3 = profile.central_moments[1];
    const double g4 = profile.central_moments[2];
    const double g5 = profile.central_moments[3];
    profile.cumulants = {g3, g4 - 3.0 * g2 * g2, g5 - 10.0 * g3 * g2};
    if (!(g2 > 0.0)) {
      return absl::InternalError("nonpositive variance computed for " + tag);
    }
  }
  profile.branch = branch;
  profile.variable = variable;
  return profile;
}

namespace {

auto ProfileKey(const PllrMomentProfile& p) {
  return std::make_tuple(p.point_mass, p.symmetric, p.mean, p.central_moments,
                         p.abs_central_moments, p.abs_first, p.cumulants,
                         static_cast<int>(p.branch),
                         static_cast<int>(p.variable));
}

}  // namespace

absl::StatusOr<CompositionStats> ComposeStats(
    std::span<const WeightedProfile> profiles) {
  std::vector<WeightedProfile> groups;
  for (const WeightedProfile& entry : profiles) {
    if (entry.count < 1) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "composition counts must be >= 1, got %d", entry.count));
    }
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const WeightedProfile& g) {
                             return g.profile == entry.profile;
                           });
    if (it == groups.end()) {
      groups.push_back(entry);
    } else {
      it->count += entry.count;
    }
  }
  if (groups.empty()) {
    return absl::InvalidArgumentError("composition must contain a step");
  }
  std::sort(groups.begin(), groups.end(),
            [](const WeightedProfile& a, const WeightedProfile& b) {
              return ProfileKey(a.profile) < ProfileKey(b.profile);
            });

  CompositionStats stats;
  stats.distinct_profiles = static_cast<int64_t>(groups.size());
  double variance = 0.0;
  for (const WeightedProfile& g : groups) {
    const double c = static_cast<double>(g.count);
    stats.m += g.count;
    stats.mean += c * g.profile.mean;
    variance += c * g.profile.variance();
    if (!g.profile.point_mass && !g.profile.symmetric) {
      stats.has_nonzero_third_moment = true;
    }
  }
  if (!(variance > 0.0)) {
    stats.degenerate = true;
    return stats;
  }
  const double m = static_cast<double>(stats.m);
  stats.b = std::sqrt(variance);
  stats.b_bar = stats.b / std::sqrt(m);
  const double b2 = stats.b_bar * stats.b_bar;
  const double b3 = b2 * stats.b_bar;
  const double b4 = b2 * b2;
  const double b5 = b4 * stats.b_bar;
  double k3 = 0.0, k4 = 0.0, correction = 0.0, l3 = 0.0, l4 = 0.0, l5 = 0.0;
  for (const WeightedProfile& g : groups) {
    const double c = static_cast<double>(g.count);
    const PllrMomentProfile& p = g.profile;
    l3 += c * p.cumulant(3);
    l4 += c * p.cumulant(4);
    l5 += c * p.cumulant(5);
    k3 += c * p.abs_central_moments[0];
    k4 += c * p.abs_central_moments[1];
    correction += c * p.abs_first * p.variance();
  }
  stats.lambda3 = l3 / (m * b3);
  stats.lambda4 = l4 / (m * b4);
  stats.lambda5 = l5 / (m * b5);
  stats.k3 = k3 / (m * b3);
  stats.k4 = k4 / (m * b4);
  stats.k3_tilde = stats.k3 + correction / (m * b3);
  return stats;
}

}  // namespace edgeworth_accountant
