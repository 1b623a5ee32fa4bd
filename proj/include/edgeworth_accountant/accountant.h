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

// The Edgeworth accountant. For each PLLR branch alpha of a composition,
//
//   delta^(alpha)(eps) = 1 - F_Y(eps) - e^eps (1 - F_X(eps))
//
// with F_X, F_Y the CDFs of the summed PLLRs; the composition is
// (eps, sup_alpha delta^(alpha)(eps))-DP. AEA substitutes Edgeworth CDFs for
// F_X and F_Y. EEAI widens the first-order AEA by the explicit approximation
// error bounds into an interval that provably contains delta(eps).

#ifndef EDGEWORTH_ACCOUNTANT_ACCOUNTANT_H_
#define EDGEWORTH_ACCOUNTANT_ACCOUNTANT_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "edgeworth_accountant/bounds.h"
#include "edgeworth_accountant/mechanisms.h"
#include "edgeworth_accountant/oracle.h"

namespace edgeworth_accountant {

enum class AccountantMode { kAea, kEeai, kOracle, kClt };

std::string_view AccountantModeName(AccountantMode mode);
absl::StatusOr<AccountantMode> ParseAccountantMode(std::string_view name);

struct AccountantOptions {
  double smoothing_eps = kDefaultSmoothingEps;
  // Tightens Delta_X with the exponential tail bounds when they apply.
  bool use_tail_bounds = true;
  OracleOptions oracle;
  // Absolute tolerance of the eps(delta) root finder.
  double epsilon_tolerance = 1e-10;
  // Bracket widening for eps(delta) stops here.
  double epsilon_cap = 1000.0;
  // Points of the coarse scan that locates the first crossing.
  int scan_points = 128;
};

class AccountantRequest {
 public:
  // EEAI requires order 1 and CLT order 0. Counts must be >= 1.
  static absl::StatusOr<AccountantRequest> Create(
      std::vector<CompositionEntry> composition, AccountantMode mode, int order,
      AccountantOptions options = {});

  const std::vector<CompositionEntry>& composition() const { return composition_; }
  AccountantMode mode() const { return mode_; }
  int order() const { return order_; }
  const AccountantOptions& options() const { return options_; }
  // Total number of steps.
  int64_t m() const;

 private:
  friend class Accountant;
  AccountantRequest() = default;

  std::vector<CompositionEntry> composition_;
  AccountantMode mode_ = AccountantMode::kAea;
  int order_ = 2;
  AccountantOptions options_;
};

// Raw (unclamped) values for one branch.
struct BranchDelta {
  PllrBranch branch = PllrBranch::kPrimary;
  std::optional<double> lower;
  double estimate = 0.0;
  std::optional<double> upper;
};

struct PrivacyPoint {
  double epsilon = 0.0;
  // Bounds are present in EEAI and oracle modes.
  std::optional<double> delta_lower;
  double delta_est = 0.0;
  std::optional<double> delta_upper;
  // Supremum over branches before clamping into [0, 1].
  std::optional<double> raw_lower;
  double raw_est = 0.0;
  std::optional<double> raw_upper;
  std::vector<BranchDelta> per_branch;
};

struct EpsilonInterval {
  double delta = 0.0;
  std::optional<double> eps_lower;
  double eps_est = 0.0;
  // Absent when the upper curve stays above delta up to the search cap.
  std::optional<double> eps_upper;
  std::vector<std::string> diagnostics;
};

// Thread-safe memo of per-step moment profiles, shared across requests.
class ProfileCache {
 public:
  absl::StatusOr<PllrMomentProfile> Get(const MechanismSpec& spec,
                                        PllrBranch branch, PllrVariable variable);

 private:
  using Key = std::tuple<MechanismSpec, PllrBranch, PllrVariable>;
  std::mutex mutex_;
  std::map<Key, PllrMomentProfile> profiles_;
};

// Per-branch quantities behind an EEAI evaluation at one eps.
struct BranchBoundDiagnostics {
  PllrBranch branch = PllrBranch::kPrimary;
  CompositionStats x_stats;
  CompositionStats y_stats;
  double uniform_x = 0.0;
  double uniform_y = 0.0;
  // Tail bound on P(sum X >= eps) when available.
  std::optional<double> tail_x;
  double delta_x = 0.0;
  double delta_y = 0.0;
};

class Accountant {
 public:
  static absl::StatusOr<Accountant> Create(
      const AccountantRequest& request,
      std::shared_ptr<ProfileCache> cache = nullptr);

  // Requires eps >= 0. A composition of identity steps gives delta = 0.
  absl::StatusOr<PrivacyPoint> DeltaAtEpsilon(double epsilon) const;
  // Requires delta in (0, 1). Each eps is the first crossing
  // inf{eps >= 0 : curve(eps) <= delta} of the corresponding delta curve.
  absl::StatusOr<EpsilonInterval> EpsilonAtDelta(double delta) const;

  // Available in EEAI mode.
  absl::StatusOr<std::vector<BranchBoundDiagnostics>> BoundDiagnostics(
      double epsilon) const;

  const AccountantRequest& request() const { return request_; }
  bool degenerate() const { return degenerate_; }

 private:
  struct Branch;
  Accountant() = default;

  // Sup over branches of the raw lower, estimate and upper curves.
  void Evaluate(double epsilon, double* lower, double* estimate,
                double* upper, std::vector<BranchDelta>* per_branch) const;
  double InitialBracket(double delta) const;

  AccountantRequest request_;
  bool degenerate_ = false;
  std::vector<std::shared_ptr<const Branch>> branches_;
  std::shared_ptr<const OracleAccountant> oracle_;
};

// Convenience wrappers that build a one-shot Accountant.
absl::StatusOr<PrivacyPoint> DeltaAtEpsilon(const AccountantRequest& request,
                                            double epsilon);
absl::StatusOr<EpsilonInterval> EpsilonAtDelta(const AccountantRequest& request,
                                               double delta);

struct PrivacyTarget {
  enum class Kind { kEpsilon, kDelta };
  Kind kind = Kind::kEpsilon;
  double value = 0.0;
};

using CurveValue = std::variant<PrivacyPoint, EpsilonInterval>;

struct CurvePoint {
  int64_t m = 0;
  absl::StatusOr<CurveValue> value;
};

// Evaluates `target` for each request, concurrently, sharing one profile
// cache. Output order follows the input. `m_values[i]` labels request i.
std::vector<CurvePoint> EvaluateRequests(
    const std::vector<AccountantRequest>& requests,
    const std::vector<int64_t>& m_values, const PrivacyTarget& target,
    std::shared_ptr<ProfileCache> cache = nullptr);

// The composition of `request` repeated m times, for each m of the ascending,
// nonempty `m_grid`. Per-step moments are computed once, so each extra point
// costs O(1) in m.
absl::StatusOr<std::vector<CurvePoint>> PrivacyCurve(
    const AccountantRequest& request, const std::vector<int64_t>& m_grid,
    const PrivacyTarget& target);

// min of the two loose range bounds
//   m log(p delta / (1 - Phi(z_delta + mu))),
//   log(delta / (1 - Phi((z_{delta / sqrt(m)} + mu) / sqrt(m)))),
// keeping only finite, positive terms. Returns nullopt when none qualify.
std::optional<double> EpsilonSearchRange(int64_t m, double p, double mu,
                                         double delta);

}  // namespace edgeworth_accountant

#endif  // EDGEWORTH_ACCOUNTANT_ACCOUNTANT_H_
