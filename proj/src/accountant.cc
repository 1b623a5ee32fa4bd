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

#include "edgeworth_accountant/accountant.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "edgeworth_accountant/edgeworth_series.h"
#include "edgeworth_accountant/numerics.h"

namespace edgeworth_accountant {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// e^eps * s without overflow to NaN when s == 0.
double ExpTimes(double epsilon, double s) {
  if (s == 0.0) return 0.0;
  if (s < 0.0) return -std::exp(epsilon + std::log(-s));
  return std::exp(epsilon + std::log(s));
}

double Clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

enum class TailKind { kNone, kGaussian, kLaplace };

}  // namespace

struct Accountant::Branch {
  PllrBranch branch = PllrBranch::kPrimary;
  CompositionStats x_stats;
  CompositionStats y_stats;
  std::optional<EdgeworthSeries> x;
  std::optional<EdgeworthSeries> y;
  bool with_bounds = false;
  double uniform_x = 0.0;
  double uniform_y = 0.0;
  TailKind tail_kind = TailKind::kNone;
  TailBoundParams gaussian_tail;
  LaplaceTailParams laplace_tail;
  int64_t tail_m = 0;

  std::optional<double> TailX(double epsilon) const {
    switch (tail_kind) {
      case TailKind::kGaussian:
        return GaussianTailBound(gaussian_tail, tail_m, epsilon);
      case TailKind::kLaplace:
        return LaplaceTailBound(laplace_tail, tail_m, epsilon);
      case TailKind::kNone:
        break;
    }
    return std::nullopt;
  }

  double DeltaX(double epsilon, double sx) const {
    double dx = uniform_x;
    if (const auto tail = TailX(epsilon); tail.has_value()) {
      dx = std::min(dx, TailImpliedCdfError(sx, *tail));
    }
    return dx;
  }
};

std::string_view AccountantModeName(AccountantMode mode) {
  switch (mode) {
    case AccountantMode::kAea:
      return "aea";
    case AccountantMode::kEeai:
      return "eeai";
    case AccountantMode::kOracle:
      return "oracle";
    case AccountantMode::kClt:
      return "clt";
  }
  return "unknown";
}

absl::StatusOr<AccountantMode> ParseAccountantMode(std::string_view name) {
  for (AccountantMode mode : {AccountantMode::kAea, AccountantMode::kEeai,
                              AccountantMode::kOracle, AccountantMode::kClt}) {
    if (name == AccountantModeName(mode)) return mode;
  }
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown mode '%s' (expected aea|eeai|oracle|clt)", std::string(name)));
}

absl::StatusOr<AccountantRequest> AccountantRequest::Create(
    std::vector<CompositionEntry> composition, AccountantMode mode, int order,
    AccountantOptions options) {
  if (composition.empty()) {
    return absl::InvalidArgumentError("composition must contain at least one step");
  }
  for (const CompositionEntry& entry : composition) {
    if (entry.count < 1) {
      return absl::InvalidArgumentError(
          absl::StrFormat("composition counts must be >= 1, got %d", entry.count));
    }
  }
  if (order < 0 || order > EdgeworthSeries::kMaxOrder) {
    return absl::InvalidArgumentError(
        absl::StrFormat("order must be in [0, 3], got %d", order));
  }
  if (mode == AccountantMode::kEeai && order != 1) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "eeai mode has finite-sample bounds for order 1 only, got order %d", order));
  }
  if (mode == AccountantMode::kClt && order != 0) {
    return absl::InvalidArgumentError(
        absl::StrFormat("clt mode is order 0, got order %d", order));
  }
  if (!(options.smoothing_eps > 0.0 && options.smoothing_eps < 1.0 / 3.0)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "smoothing_eps must lie in (0, 1/3), got %g", options.smoothing_eps));
  }
  if (!(options.epsilon_tolerance > 0.0) || !(options.epsilon_cap > 0.0) ||
      options.scan_points < 2) {
    return absl::InvalidArgumentError("invalid root-finding options");
  }
  int64_t total = 0;
  for (const CompositionEntry& entry : composition) {
    if (entry.count > std::numeric_limits<int64_t>::max() - total) {
      return absl::InvalidArgumentError("total step count overflows");
    }
    total += entry.count;
  }
  AccountantRequest request;
  request.composition_ = std::move(composition);
  request.mode_ = mode;
  request.order_ = order;
  request.options_ = options;
  return request;
}

int64_t AccountantRequest::m() const {
  int64_t total = 0;
  for (const CompositionEntry& entry : composition_) total += entry.count;
  return total;
}

absl::StatusOr<PllrMomentProfile> ProfileCache::Get(const MechanismSpec& spec,
                                                    PllrBranch branch,
                                                    PllrVariable variable) {
  const Key key{spec, branch, variable};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = profiles_.find(key); it != profiles_.end()) return it->second;
  }
  auto profile = PllrMoments(spec, branch, variable);
  if (!profile.ok()) return profile.status();
  std::lock_guard<std::mutex> lock(mutex_);
  profiles_.emplace(key, *profile);
  return *profile;
}

absl::StatusOr<Accountant> Accountant::Create(const AccountantRequest& request,
                                              std::shared_ptr<ProfileCache> cache) {
  if (cache == nullptr) cache = std::make_shared<ProfileCache>();
  Accountant accountant;
  accountant.request_ = request;

  std::map<MechanismSpec, int64_t> active;
  for (const CompositionEntry& entry : request.composition()) {
    if (!entry.spec.is_identity()) active[entry.spec] += entry.count;
  }
  if (active.empty()) {
    accountant.degenerate_ = true;
    return accountant;
  }

  if (request.mode() == AccountantMode::kOracle) {
    auto oracle = OracleAccountant::Create(request.composition(),
                                           request.options().oracle);
    if (!oracle.ok()) return oracle.status();
    accountant.oracle_ = std::make_shared<const OracleAccountant>(*std::move(oracle));
    return accountant;
  }

  bool any_inverse = false;
  bool all_pure = true;
  for (const auto& [spec, count] : active) {
    any_inverse |= spec.SupportsBranch(PllrBranch::kInverse);
    all_pure &= spec.kind() == MechanismKind::kPureGaussian;
  }
  const bool eeai = request.mode() == AccountantMode::kEeai;
  const int order = request.mode() == AccountantMode::kClt ? 0 : request.order();
  std::vector<PllrBranch> branches = {PllrBranch::kPrimary};
  if (any_inverse) branches.push_back(PllrBranch::kInverse);

  for (PllrBranch branch : branches) {
    auto b = std::make_shared<Branch>();
    b->branch = branch;
    std::vector<WeightedProfile> xs;
    std::vector<WeightedProfile> ys;
    for (const auto& [spec, count] : active) {
      // Self-dual mechanisms reuse their primary PLLRs on the inverse branch.
      const PllrBranch own =
          spec.SupportsBranch(branch) ? branch : PllrBranch::kPrimary;
      auto x = cache->Get(spec, own, PllrVariable::kX);
      if (!x.ok()) return x.status();
      auto y = cache->Get(spec, own, PllrVariable::kY);
      if (!y.ok()) return y.status();
      xs.push_back({*x, count});
      ys.push_back({*y, count});
    }
    auto x_stats = ComposeStats(xs);
    if (!x_stats.ok()) return x_stats.status();
    auto y_stats = ComposeStats(ys);
    if (!y_stats.ok()) return y_stats.status();
    b->x_stats = *x_stats;
    b->y_stats = *y_stats;
    auto x_series = EdgeworthSeries::Create(order, *x_stats, PllrVariable::kX, branch);
    if (!x_series.ok()) return x_series.status();
    auto y_series = EdgeworthSeries::Create(order, *y_stats, PllrVariable::kY, branch);
    if (!y_series.ok()) return y_series.status();
    b->x = *x_series;
    b->y = *y_series;

    if (eeai) {
      b->with_bounds = true;
      // A sum of Gaussian PLLRs is Gaussian and the first-order series is
      // then exact.
      if (!all_pure && !x_stats->degenerate) {
        const double se = request.options().smoothing_eps;
        auto x_inputs = UniformBoundInputs::Create(*x_stats, se);
        if (!x_inputs.ok()) return x_inputs.status();
        auto ux = UniformBoundOrder1(*x_inputs);
        if (!ux.ok()) return ux.status();
        auto y_inputs = UniformBoundInputs::Create(*y_stats, se);
        if (!y_inputs.ok()) return y_inputs.status();
        auto uy = UniformBoundOrder1(*y_inputs);
        if (!uy.ok()) return uy.status();
        b->uniform_x = *ux;
        b->uniform_y = *uy;
      }
      if (request.options().use_tail_bounds && active.size() == 1) {
        const auto& [spec, count] = *active.begin();
        b->tail_m = count;
        if (spec.kind() == MechanismKind::kSubsampledGaussian &&
            branch == PllrBranch::kPrimary) {
          auto a = ChooseTruncationPoint(spec);
          if (a.ok()) {
            auto params = GaussianTailParams(spec, *a);
            if (params.ok()) {
              b->gaussian_tail = *params;
              b->tail_kind = TailKind::kGaussian;
            } else if (!absl::IsUnavailable(params.status())) {
              return params.status();
            }
          } else if (!absl::IsUnavailable(a.status())) {
            return a.status();
          }
        } else if (spec.kind() == MechanismKind::kSubsampledLaplace) {
          auto params = ComputeLaplaceTailParams(spec);
          if (params.ok()) {
            b->laplace_tail = *params;
            b->tail_kind = TailKind::kLaplace;
          } else if (!absl::IsUnavailable(params.status())) {
            return params.status();
          }
        }
      }
    }
    accountant.branches_.push_back(std::move(b));
  }
  return accountant;
}

void Accountant::Evaluate(double epsilon, double* lower, double* estimate,
                          double* upper,
                          std::vector<BranchDelta>* per_branch) const {
  *lower = -kInf;
  *estimate = -kInf;
  *upper = -kInf;
  if (oracle_ != nullptr) {
    const OracleDelta d = oracle_->Delta(epsilon);
    *lower = d.lower;
    *estimate = d.estimate;
    *upper = d.upper;
    return;
  }
  for (const auto& b : branches_) {
    const double sx = b->x->Sf(epsilon);
    const double sy = b->y->Sf(epsilon);
    BranchDelta value;
    value.branch = b->branch;
    value.estimate = sy - ExpTimes(epsilon, sx);
    if (b->with_bounds) {
      const double dx = b->DeltaX(epsilon, sx);
      const double dy = b->uniform_y;
      // The survival functions of the true sums lie in [0, 1] and within
      // dx, dy of the series; the band keeps the estimate inside.
      const double lo = std::max(0.0, sy - dy) - ExpTimes(epsilon, std::min(1.0, sx + dx));
      const double hi = std::min(1.0, sy + dy) - ExpTimes(epsilon, std::max(0.0, sx - dx));
      value.lower = std::min(value.estimate, lo);
      value.upper = std::max(value.estimate, hi);
      *lower = std::max(*lower, *value.lower);
      *upper = std::max(*upper, *value.upper);
    }
    *estimate = std::max(*estimate, value.estimate);
    if (per_branch != nullptr) per_branch->push_back(value);
  }
}

absl::StatusOr<PrivacyPoint> Accountant::DeltaAtEpsilon(double epsilon) const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("epsilon must be finite and >= 0, got %g", epsilon));
  }
  PrivacyPoint point;
  point.epsilon = epsilon;
  const bool bounded = request_.mode() == AccountantMode::kEeai ||
                       request_.mode() == AccountantMode::kOracle;
  if (degenerate_) {
    if (bounded) {
      point.delta_lower = point.delta_upper = 0.0;
      point.raw_lower = point.raw_upper = 0.0;
    }
    return point;
  }
  double lower, estimate, upper;
  Evaluate(epsilon, &lower, &estimate, &upper, &point.per_branch);
  point.raw_est = estimate;
  point.delta_est = Clamp01(estimate);
  if (bounded) {
    point.raw_lower = lower;
    point.raw_upper = upper;
    point.delta_lower = Clamp01(lower);
    point.delta_upper = Clamp01(upper);
  }
  return point;
}

double Accountant::InitialBracket(double delta) const {
  std::map<MechanismSpec, int64_t> active;
  for (const CompositionEntry& entry : request_.composition()) {
    if (!entry.spec.is_identity()) active[entry.spec] += entry.count;
  }
  double hi = 1.0;
  if (active.size() == 1) {
    const auto& [spec, count] = *active.begin();
    if (spec.kind() != MechanismKind::kSubsampledLaplace) {
      if (auto c = EpsilonSearchRange(count, spec.p(), spec.mu(), delta); c) {
        hi = std::max(hi, *c);
      }
    }
  }
  return std::min(hi, request_.options().epsilon_cap);
}

namespace {

// inf{eps >= 0 : curve(eps) <= delta}, located by a uniform scan of
// [0, hi] followed by bracketed refinement. `hi` doubles until the curve is
// below delta; nullopt when that never happens below `cap`.
absl::StatusOr<std::optional<double>> FirstCrossing(
    const std::function<double(double)>& curve, double delta, double hi,
    const AccountantOptions& options) {
  if (curve(0.0) <= delta) return std::optional<double>(0.0);
  while (curve(hi) > delta) {
    if (hi >= options.epsilon_cap) return std::optional<double>();
    hi = std::min(2.0 * hi, options.epsilon_cap);
  }
  const int n = options.scan_points;
  double left = 0.0;
  double right = hi;
  for (int i = 1; i <= n; ++i) {
    const double x = hi * static_cast<double>(i) / n;
    if (curve(x) <= delta) {
      right = x;
      break;
    }
    left = x;
  }
  RootOptions root;
  root.x_tolerance = options.epsilon_tolerance;
  auto r = FindBracketedRoot([&](double e) { return curve(e) - delta; }, left,
                             right, root);
  if (!r.ok()) return r.status();
  return std::optional<double>(*r);
}

}  // namespace

absl::StatusOr<EpsilonInterval> Accountant::EpsilonAtDelta(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in (0, 1), got %g", delta));
  }
  EpsilonInterval result;
  result.delta = delta;
  const bool bounded = request_.mode() == AccountantMode::kEeai ||
                       request_.mode() == AccountantMode::kOracle;
  if (degenerate_) {
    if (bounded) result.eps_lower = result.eps_upper = 0.0;
    return result;
  }
  const AccountantOptions& options = request_.options();
  auto lower_curve = [this](double e) {
    double lo, est, hi;
    Evaluate(e, &lo, &est, &hi, nullptr);
    return Clamp01(lo);
  };
  auto est_curve = [this](double e) {
    double lo, est, hi;
    Evaluate(e, &lo, &est, &hi, nullptr);
    return Clamp01(est);
  };
  auto upper_curve = [this](double e) {
    double lo, est, hi;
    Evaluate(e, &lo, &est, &hi, nullptr);
    return Clamp01(hi);
  };
  const double hi = InitialBracket(delta);
  auto est = FirstCrossing(est_curve, delta, hi, options);
  if (!est.ok()) return est.status();
  if (!est->has_value()) {
    return absl::InternalError(absl::StrFormat(
        "estimated delta curve stays above %g on [0, %g]; cannot invert", delta,
        options.epsilon_cap));
  }
  result.eps_est = **est;
  if (bounded) {
    auto lower = FirstCrossing(lower_curve, delta, hi, options);
    if (!lower.ok()) return lower.status();
    result.eps_lower = lower->value_or(0.0);
    auto upper = FirstCrossing(upper_curve, delta, std::max(hi, result.eps_est), options);
    if (!upper.ok()) return upper.status();
    result.eps_upper = *upper;
    if (!result.eps_upper.has_value()) {
      result.diagnostics.push_back(absl::StrFormat(
          "upper delta curve stays above %g for eps <= %g; eps_upper is unbounded",
          delta, options.epsilon_cap));
    }
  }
  return result;
}

absl::StatusOr<std::vector<BranchBoundDiagnostics>> Accountant::BoundDiagnostics(
    double epsilon) const {
  if (request_.mode() != AccountantMode::kEeai) {
    return absl::FailedPreconditionError("bound diagnostics need eeai mode");
  }
  std::vector<BranchBoundDiagnostics> out;
  for (const auto& b : branches_) {
    BranchBoundDiagnostics d;
    d.branch = b->branch;
    d.x_stats = b->x_stats;
    d.y_stats = b->y_stats;
    d.uniform_x = b->uniform_x;
    d.uniform_y = b->uniform_y;
    d.tail_x = b->TailX(epsilon);
    d.delta_x = b->DeltaX(epsilon, b->x->Sf(epsilon));
    d.delta_y = b->uniform_y;
    out.push_back(d);
  }
  return out;
}

absl::StatusOr<PrivacyPoint> DeltaAtEpsilon(const AccountantRequest& request,
                                            double epsilon) {
  auto accountant = Accountant::Create(request);
  if (!accountant.ok()) return accountant.status();
  return accountant->DeltaAtEpsilon(epsilon);
}

absl::StatusOr<EpsilonInterval> EpsilonAtDelta(const AccountantRequest& request,
                                               double delta) {
  auto accountant = Accountant::Create(request);
  if (!accountant.ok()) return accountant.status();
  return accountant->EpsilonAtDelta(delta);
}

std::vector<CurvePoint> EvaluateRequests(
    const std::vector<AccountantRequest>& requests,
    const std::vector<int64_t>& m_values, const PrivacyTarget& target,
    std::shared_ptr<ProfileCache> cache) {
  if (cache == nullptr) cache = std::make_shared<ProfileCache>();
  std::vector<CurvePoint> points(requests.size());
  auto evaluate = [&](size_t i) -> absl::StatusOr<CurveValue> {
    auto accountant = Accountant::Create(requests[i], cache);
    if (!accountant.ok()) return accountant.status();
    if (target.kind == PrivacyTarget::Kind::kEpsilon) {
      auto point = accountant->DeltaAtEpsilon(target.value);
      if (!point.ok()) return point.status();
      return CurveValue(*std::move(point));
    }
    auto interval = accountant->EpsilonAtDelta(target.value);
    if (!interval.ok()) return interval.status();
    return CurveValue(*std::move(interval));
  };
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next++; i < requests.size(); i = next++) {
      points[i].m = i < m_values.size() ? m_values[i] : requests[i].m();
      points[i].value = evaluate(i);
    }
  };
  const int workers = std::max(
      1, std::min<int>(WorkerCount(), static_cast<int>(requests.size())));
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (std::thread& t : threads) t.join();
  return points;
}

absl::StatusOr<std::vector<CurvePoint>> PrivacyCurve(
    const AccountantRequest& request, const std::vector<int64_t>& m_grid,
    const PrivacyTarget& target) {
  if (m_grid.empty()) return absl::InvalidArgumentError("m grid is empty");
  for (size_t i = 0; i < m_grid.size(); ++i) {
    if (m_grid[i] < 1) return absl::InvalidArgumentError("m values must be >= 1");
    if (i > 0 && m_grid[i] < m_grid[i - 1]) {
      return absl::InvalidArgumentError("m grid must be ascending");
    }
  }
  std::vector<AccountantRequest> requests;
  requests.reserve(m_grid.size());
  for (int64_t m : m_grid) {
    std::vector<CompositionEntry> composition = request.composition();
    for (CompositionEntry& entry : composition) {
      if (entry.count > std::numeric_limits<int64_t>::max() / m) {
        return absl::InvalidArgumentError("step count overflows");
      }
      entry.count *= m;
    }
    auto scaled = AccountantRequest::Create(std::move(composition), request.mode(),
                                            request.order(), request.options());
    if (!scaled.ok()) return scaled.status();
    requests.push_back(*std::move(scaled));
  }
  return EvaluateRequests(requests, m_grid, target);
}

std::optional<double> EpsilonSearchRange(int64_t m, double p, double mu,
                                         double delta) {
  if (m < 1 || !(p > 0.0) || !(mu > 0.0) || !(delta > 0.0 && delta < 1.0)) {
    return std::nullopt;
  }
  const double md = static_cast<double>(m);
  std::optional<double> best;
  auto consider = [&best](double c) {
    if (std::isfinite(c) && c > 0.0) best = best ? std::min(*best, c) : c;
  };
  const double z = NormalUpperQuantile(delta);
  consider(md * std::log(p * delta / NormalSf(z + mu)));
  const double q = delta / std::sqrt(md);
  if (q > std::numeric_limits<double>::min()) {
    const double zq = NormalUpperQuantile(q);
    consider(std::log(delta / NormalSf((zq + mu) / std::sqrt(md))));
  }
  return best;
}

}  // namespace edgeworth_accountant
