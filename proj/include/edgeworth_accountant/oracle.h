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

// Numerical ground truth for desk-scale compositions: grid discretization of
// single-step PLLR laws, FFT convolution of m-fold sums, Monte Carlo samplers,
// and the characteristic-function modulus used by the refined bound.
//
// This is a validation instrument. Its discretization error is controlled but
// not certified.

#ifndef EDGEWORTH_ACCOUNTANT_ORACLE_H_
#define EDGEWORTH_ACCOUNTANT_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "edgeworth_accountant/mechanisms.h"

namespace edgeworth_accountant {

// Point masses on the lattice lo + k * step, k = 0..n-1.
class GridDensity {
 public:
  static absl::StatusOr<GridDensity> Create(double lo, double step,
                                            std::vector<double> mass);

  double lo() const { return lo_; }
  double hi() const { return lo_ + step_ * static_cast<double>(mass_.size() - 1); }
  double step() const { return step_; }
  size_t size() const { return mass_.size(); }
  const std::vector<double>& mass() const { return mass_; }
  double point(size_t k) const { return lo_ + step_ * static_cast<double>(k); }

  double TotalMass() const;
  double Mean() const;
  double Variance() const;
  // Each mass is spread over its cell (x_k - h/2, x_k + h/2]; the CDF is the
  // cumulative mass at cell edges, linearly interpolated in between.
  double Cdf(double x) const;
  double Sf(double x) const;

 private:
  GridDensity(double lo, double step, std::vector<double> mass);

  double lo_;
  double step_;
  std::vector<double> mass_;
  // prefix_[k] = mass_[0] + ... + mass_[k - 1]; suffix_[k] = mass_[k] + ...
  std::vector<double> prefix_;
  std::vector<double> suffix_;
};

// Where the mass of a cell is placed relative to the lattice point.
enum class Rounding {
  // Mass of (x_k - h/2, x_k + h/2] goes to x_k.
  kNearest,
  // Mass of (x_{k-1}, x_k] goes to x_k, so values only move up.
  kUp,
  // Mass of [x_k, x_{k+1}) goes to x_k, so values only move down.
  kDown,
};

// Discretizes `law` onto lo + k * step, k < n. Mass outside the window is
// folded into the end cells.
absl::StatusOr<GridDensity> DiscretizeLaw(const PllrDistribution& law,
                                          double lo, double step, size_t n,
                                          Rounding rounding);

struct ConvolutionOptions {
  // Lattice size is doubled (zero padding) while the outer sixteenths of the
  // output window hold more than `tail_tolerance` of the mass.
  size_t max_grid_size = size_t{1} << 24;
  double tail_tolerance = 1e-12;
  // When positive, two extra transforms with exponential tilts of +-tail_tilt
  // standard deviations of the sum recover tail masses far below the FFT
  // roundoff floor of the untilted sum.
  double tail_tilt = 0.0;
};

// Law of the sum of independent steps: `count` copies of each grid. All grids
// must share the step size and length. The output window is centered on the
// mean of the sum.
struct GridTerm {
  const GridDensity* grid = nullptr;
  int64_t count = 1;
};
absl::StatusOr<GridDensity> ConvolveComposition(
    std::span<const GridTerm> terms, const ConvolutionOptions& options = {});

absl::StatusOr<GridDensity> ConvolveMFold(const GridDensity& step, int64_t m,
                                          const ConvolutionOptions& options = {});

struct OracleOptions {
  size_t grid_size = size_t{1} << 20;
  size_t max_grid_size = size_t{1} << 24;
  // Half-width of the sum window in units of B_m.
  double window_sigmas = 12.0;
  // Lattice step is refined until it is below the smallest step standard
  // deviation divided by this value.
  double resolution = 50.0;
  double tail_tolerance = 1e-12;
  double tail_tilt = 6.0;
};

// Oracle law of sum_i V_i for one (branch, variable) of a composition.
absl::StatusOr<GridDensity> OracleSumLaw(std::span<const CompositionEntry> composition,
                                         PllrBranch branch, PllrVariable variable,
                                         Rounding rounding,
                                         const OracleOptions& options = {});

// delta(eps) = E[(1 - e^{eps - Y})_+] over a grid law of the Y sum, with
// suffix sums so that each evaluation costs O(log n). The law is normalized to
// unit mass and delta is clamped into [0, 1].
class GridPrivacyCurve {
 public:
  explicit GridPrivacyCurve(const GridDensity& y_sum);
  double Delta(double epsilon) const;

 private:
  double lo_;
  double step_;
  std::vector<double> points_;
  std::vector<double> suffix_mass_;
  // Suffix sums of mass_k e^{-(y_k - shift_)}.
  std::vector<double> suffix_weighted_;
  double shift_;
};

struct OracleDelta {
  double lower = 0.0;
  double estimate = 0.0;
  double upper = 0.0;
};

// delta(eps) of a composition from FFT convolution, maximized over branches.
// The band comes from rounding the Y lattice down and up; the estimate uses
// nearest rounding.
class OracleAccountant {
 public:
  static absl::StatusOr<OracleAccountant> Create(
      std::span<const CompositionEntry> composition,
      const OracleOptions& options = {});

  OracleDelta Delta(double epsilon) const;
  bool degenerate() const { return degenerate_; }

 private:
  struct Branch {
    GridPrivacyCurve nearest;
    GridPrivacyCurve down;
    GridPrivacyCurve up;
  };
  OracleAccountant() = default;

  bool degenerate_ = false;
  std::vector<Branch> branches_;
};

// |f(t / B_m)|^m where f is the characteristic function of the centered step
// grid and B_m^2 = m Var(step). The returned callable owns its data.
std::function<double(double)> CfModulus(const GridDensity& step_density,
                                        int64_t m);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of P(sum_{i<=m} V_i >= threshold) for each threshold,
// reusing one set of n_samples sums. Samples come from a counter-based
// generator keyed by `seed`, so results do not depend on the thread count.
absl::StatusOr<std::vector<McEstimate>> McTails(
    const MechanismSpec& spec, PllrBranch branch, PllrVariable variable,
    int64_t m, std::span<const double> thresholds, int64_t n_samples,
    uint64_t seed);

absl::StatusOr<McEstimate> McTail(const MechanismSpec& spec, PllrBranch branch,
                                  PllrVariable variable, int64_t m,
                                  double threshold, int64_t n_samples,
                                  uint64_t seed);

// Draws n_samples sums and hands them to `consume` in order, in blocks.
absl::Status SampleSums(const MechanismSpec& spec, PllrBranch branch,
                        PllrVariable variable, int64_t m, int64_t n_samples,
                        uint64_t seed,
                        const std::function<void(std::span<const double>)>& consume);

// Worker count: hardware concurrency capped by EA_NUM_THREADS when set.
int WorkerCount();

}  // namespace edgeworth_accountant

#endif  // EDGEWORTH_ACCOUNTANT_ORACLE_H_
