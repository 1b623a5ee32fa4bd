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

// Privacy-loss log-likelihood ratio (PLLR) families of the supported
// mechanisms, their single-step distributions and moments, and aggregation of
// moments over a composition.
//
// For a mechanism with null P and alternative Q the PLLR of one step is
// log(dQ/dP)(w). X denotes its law under w ~ P and Y its law under w ~ Q.
// Subsampled mechanisms have two branches: the primary branch tests P against
// the mixture Q = (1 - p) P + p P_mu, and the inverse branch swaps the roles of
// the two hypotheses.

#ifndef EDGEWORTH_ACCOUNTANT_MECHANISMS_H_
#define EDGEWORTH_ACCOUNTANT_MECHANISMS_H_

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"

namespace edgeworth_accountant {

enum class MechanismKind { kSubsampledGaussian, kSubsampledLaplace, kPureGaussian };
enum class PllrBranch { kPrimary, kInverse };
enum class PllrVariable { kX, kY };

std::string_view MechanismKindName(MechanismKind kind);
std::string_view PllrBranchName(PllrBranch branch);
std::string_view PllrVariableName(PllrVariable variable);

class MechanismSpec {
 public:
  // `mu` is the shift of the alternative (1 / sigma for Gaussian noise) and `p`
  // the subsampling probability. PureGaussian requires p = 1.
  static absl::StatusOr<MechanismSpec> Create(MechanismKind kind, double mu,
                                              double p);

  MechanismKind kind() const { return kind_; }
  double mu() const { return mu_; }
  double p() const { return p_; }

  // True when the PLLR is identically zero (mu = 0 or p = 0).
  bool is_identity() const { return mu_ == 0.0 || p_ == 0.0; }

  bool SupportsBranch(PllrBranch branch) const;
  std::vector<PllrBranch> branches() const;

  friend bool operator==(const MechanismSpec&, const MechanismSpec&) = default;
  friend auto operator<=>(const MechanismSpec&, const MechanismSpec&) = default;

 private:
  MechanismSpec(MechanismKind kind, double mu, double p)
      : kind_(kind), mu_(mu), p_(p) {}

  MechanismKind kind_;
  double mu_;
  double p_;
};

// One entry of a composition: `count` independent runs of `spec`.
struct CompositionEntry {
  MechanismSpec spec;
  int64_t count = 1;
};

struct Atom {
  double location;
  double mass;
};

// Law of one PLLR variable of one step. The law is the image of a base
// variable (Gaussian or Laplace, possibly a two-component mixture) under a
// monotone map, and may carry atoms where that map is flat.
class PllrDistribution {
 public:
  enum class BaseFamily { kGaussian, kLaplace };

  // Density of the absolutely continuous part (zero outside its support).
  double Density(double t) const;
  // P(V <= t).
  double Cdf(double t) const;
  // P(V > t), accurate in the upper tail.
  double Sf(double t) const;

  bool is_point_mass() const { return point_mass_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  // Closure of the support; may be infinite.
  double support_lower() const;
  double support_upper() const;
  // Returns the interval outside of which the law has mass below `tail`.
  std::pair<double, double> EffectiveSupport(double tail) const;

  // Base-axis description used by moment integration and sampling.
  BaseFamily family() const { return family_; }
  double mu() const { return mu_; }
  double p() const { return p_; }
  // Weight of the shifted component in the base mixture.
  double shift_weight() const { return shift_weight_; }
  // +1 when V = g(base), -1 when V = -g(base).
  int sign() const { return sign_; }
  // The increasing map g evaluated at a base point.
  double Transform(double base) const;
  double BaseDensity(double base) const;
  double BaseCdf(double base) const;
  double BaseSf(double base) const;
  // Inverse of g on the set where it is strictly increasing.
  double InverseTransform(double value) const;
  double InverseTransformDerivative(double value) const;
  // Range of g: for Laplace the two atoms, for Gaussian (log(1-p), +inf).
  double g_lower() const;
  double g_upper() const;

 private:
  friend absl::StatusOr<std::pair<PllrDistribution, PllrDistribution>>
  PllrDensityPair(const MechanismSpec& spec, PllrBranch branch);

  PllrDistribution() = default;
  // P(g(base) <= u), P(g(base) < u), and complements.
  double GCdf(double u, bool inclusive) const;
  double GSf(double u, bool inclusive) const;

  BaseFamily family_ = BaseFamily::kGaussian;
  double mu_ = 0.0;
  double p_ = 0.0;
  double shift_weight_ = 0.0;
  int sign_ = 1;
  bool point_mass_ = false;
  std::vector<Atom> atoms_;
};

// Returns (law of X, law of Y) for one step of `branch`.
absl::StatusOr<std::pair<PllrDistribution, PllrDistribution>> PllrDensityPair(
    const MechanismSpec& spec, PllrBranch branch);

absl::StatusOr<PllrDistribution> PllrLaw(const MechanismSpec& spec,
                                         PllrBranch branch,
                                         PllrVariable variable);

struct PllrMomentProfile {
  PllrBranch branch = PllrBranch::kPrimary;
  PllrVariable variable = PllrVariable::kX;
  // Set when the variable is identically zero; all moments are then zero.
  bool point_mass = false;
  // Set when the third central moment vanishes by symmetry of the law.
  bool symmetric = false;
  double mean = 0.0;
  // Central moments of orders 2..6.
  std::array<double, 5> central_moments = {};
  // E|V - mean|^3 and E|V - mean|^4.
  std::array<double, 2> abs_central_moments = {};
  // E|V - mean|.
  double abs_first = 0.0;
  // Cumulants of orders 3..5.
  std::array<double, 3> cumulants = {};

  double variance() const { return central_moments[0]; }
  double central_moment(int order) const { return central_moments[order - 2]; }
  double cumulant(int order) const { return cumulants[order - 3]; }

  friend bool operator==(const PllrMomentProfile&,
                         const PllrMomentProfile&) = default;
};

absl::StatusOr<PllrMomentProfile> PllrMoments(const MechanismSpec& spec,
                                              PllrBranch branch,
                                              PllrVariable variable);

struct CompositionStats {
  int64_t m = 0;
  // M_m, the sum of the step means.
  double mean = 0.0;
  // B_m, the standard deviation of the sum, and B_m / sqrt(m).
  double b = 0.0;
  double b_bar = 0.0;
  // Average standardized cumulants of orders 3..5.
  double lambda3 = 0.0;
  double lambda4 = 0.0;
  double lambda5 = 0.0;
  // Average standardized absolute moments K_{3,m}, K_{4,m} and the corrected
  // K~_{3,m} = K_{3,m} + (1/m) sum E|X_i - mu_i| gamma_{2,i} / B_bar^3.
  double k3 = 0.0;
  double k4 = 0.0;
  double k3_tilde = 0.0;
  // Indicator that some step has a nonzero third central moment.
  bool has_nonzero_third_moment = false;
  // All steps are point masses (B_m = 0).
  bool degenerate = false;
  // Number of distinct profiles after merging identical entries.
  int64_t distinct_profiles = 0;
};

struct WeightedProfile {
  PllrMomentProfile profile;
  int64_t count = 0;
};

// Aggregates per-step profiles. Identical profiles are merged before summing,
// so the cost is linear in the number of distinct profiles and an expanded
// list gives bit-identical results to its grouped form.
absl::StatusOr<CompositionStats> ComposeStats(
    std::span<const WeightedProfile> profiles);

}  // namespace edgeworth_accountant

#endif  // EDGEWORTH_ACCOUNTANT_MECHANISMS_H_
