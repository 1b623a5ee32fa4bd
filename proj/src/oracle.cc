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

#include "edgeworth_accountant/oracle.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"

namespace edgeworth_accountant {
namespace {

using Complex = std::complex<double>;

// FFTW's planner is not reentrant.
std::mutex& PlannerMutex() {
  static std::mutex* mutex = new std::mutex;
  return *mutex;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> AllocateFftw(size_t n) {
  return FftwBuffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

// Forward real-to-complex transform of `values` (length n) into n / 2 + 1
// coefficients.
std::vector<Complex> ForwardTransform(const std::vector<double>& values) {
  const size_t n = values.size();
  auto in = AllocateFftw<double>(n);
  auto out = AllocateFftw<fftw_complex>(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(),
                                FFTW_ESTIMATE);
  }
  std::copy(values.begin(), values.end(), in.get());
  fftw_execute(plan);
  std::vector<Complex> spectrum(n / 2 + 1);
  for (size_t k = 0; k < spectrum.size(); ++k) {
    spectrum[k] = Complex(out[k][0], out[k][1]);
  }
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
  }
  return spectrum;
}

std::vector<double> InverseTransform(const std::vector<Complex>& spectrum,
                                     size_t n) {
  auto in = AllocateFftw<fftw_complex>(n / 2 + 1);
  auto out = AllocateFftw<double>(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(),
                                FFTW_ESTIMATE);
  }
  for (size_t k = 0; k < spectrum.size(); ++k) {
    in[k][0] = spectrum[k].real();
    in[k][1] = spectrum[k].imag();
  }
  fftw_execute(plan);
  std::vector<double> values(out.get(), out.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : values) v *= scale;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
  }
  return values;
}

Complex PowerBySquaring(Complex base, int64_t exponent) {
  Complex result(1.0, 0.0);
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

}  // namespace

GridDensity::GridDensity(double lo, double step, std::vector<double> mass)
    : lo_(lo), step_(step), mass_(std::move(mass)) {
  const size_t n = mass_.size();
  prefix_.assign(n + 1, 0.0);
  suffix_.assign(n + 1, 0.0);
  for (size_t k = 0; k < n; ++k) prefix_[k + 1] = prefix_[k] + mass_[k];
  for (size_t k = n; k-- > 0;) suffix_[k] = suffix_[k + 1] + mass_[k];
}

absl::StatusOr<GridDensity> GridDensity::Create(double lo, double step,
                                                std::vector<double> mass) {
  if (mass.empty()) return absl::InvalidArgumentError("empty grid");
  if (!(step > 0.0) || !std::isfinite(step) || !std::isfinite(lo)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("invalid grid lo=%g step=%g", lo, step));
  }
  for (double v : mass) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      return absl::InvalidArgumentError("grid masses must be finite and >= 0");
    }
  }
  return GridDensity(lo, step, std::move(mass));
}

double GridDensity::TotalMass() const { return prefix_.back(); }

double GridDensity::Mean() const {
  double total = 0.0;
  for (size_t k = 0; k < mass_.size(); ++k) total += mass_[k] * point(k);
  return total / TotalMass();
}

double GridDensity::Variance() const {
  const double mean = Mean();
  double total = 0.0;
  for (size_t k = 0; k < mass_.size(); ++k) {
    const double d = point(k) - mean;
    total += mass_[k] * d * d;
  }
  return total / TotalMass();
}

double GridDensity::Cdf(double x) const {
  // Edge j sits at lo - h/2 + j h and carries prefix_[j].
  const double position = (x - (lo_ - 0.5 * step_)) / step_;
  if (position <= 0.0) return 0.0;
  const double n = static_cast<double>(mass_.size());
  if (position >= n) return prefix_.back();
  const size_t j = static_cast<size_t>(position);
  const double frac = position - static_cast<double>(j);
  return prefix_[j] + frac * mass_[j];
}

double GridDensity::Sf(double x) const {
  const double position = (x - (lo_ - 0.5 * step_)) / step_;
  if (position <= 0.0) return suffix_.front();
  const double n = static_cast<double>(mass_.size());
  if (position >= n) return 0.0;
  const size_t j = static_cast<size_t>(position);
  const double frac = position - static_cast<double>(j);
  return suffix_[j + 1] + (1.0 - frac) * mass_[j];
}

absl::StatusOr<GridDensity> DiscretizeLaw(const PllrDistribution& law,
                                          double lo, double step, size_t n,
                                          Rounding rounding) {
  if (n == 0 || !(step > 0.0)) {
    return absl::InvalidArgumentError("grid needs n > 0 and step > 0");
  }
  // Cell k collects the mass of (edge_k, edge_{k+1}].
  double offset = -0.5;
  if (rounding == Rounding::kUp) offset = -1.0;
  if (rounding == Rounding::kDown) offset = 0.0;
  std::vector<double> cdf(n + 1);
  std::vector<double> sf(n + 1);
  for (size_t j = 0; j <= n; ++j) {
    const double edge = lo + step * (static_cast<double>(j) + offset);
    cdf[j] = law.Cdf(edge);
    sf[j] = law.Sf(edge);
  }
  std::vector<double> mass(n);
  for (size_t k = 0; k < n; ++k) {
    const double value =
        cdf[k + 1] <= 0.5 ? cdf[k + 1] - cdf[k] : sf[k] - sf[k + 1];
    mass[k] = std::max(0.0, value);
  }
  mass[0] += cdf[0];
  mass[n - 1] += sf[n];
  return GridDensity::Create(lo, step, std::move(mass));
}

namespace {

// Circular m-fold sum of the terms on n points, each term's masses weighted by
// exp(theta (x - mean)) before transforming.
std::vector<double> CircularSum(std::span<const GridTerm> terms, size_t n,
                                double theta) {
  std::vector<Complex> spectrum(n / 2 + 1, Complex(1.0, 0.0));
  for (const GridTerm& term : terms) {
    const GridDensity& grid = *term.grid;
    std::vector<double> padded(n, 0.0);
    const double mean = grid.Mean();
    for (size_t k = 0; k < grid.size(); ++k) {
      const double w = grid.mass()[k];
      padded[k] = theta == 0.0 || w == 0.0
                      ? w
                      : w * std::exp(theta * (grid.point(k) - mean));
    }
    const std::vector<Complex> step_spectrum = ForwardTransform(padded);
    for (size_t k = 0; k < spectrum.size(); ++k) {
      spectrum[k] *= PowerBySquaring(step_spectrum[k], term.count);
    }
  }
  return InverseTransform(spectrum, n);
}

std::vector<double> Rotate(const std::vector<double>& circular, int64_t shift) {
  const int64_t ni = static_cast<int64_t>(circular.size());
  std::vector<double> out(circular.size());
  for (int64_t k = 0; k < ni; ++k) out[k] = circular[((k + shift) % ni + ni) % ni];
  return out;
}

}  // namespace

absl::StatusOr<GridDensity> ConvolveComposition(
    std::span<const GridTerm> terms, const ConvolutionOptions& options) {
  if (terms.empty()) return absl::InvalidArgumentError("no terms to convolve");
  const size_t base_n = terms[0].grid->size();
  const double h = terms[0].grid->step();
  if ((base_n & (base_n - 1)) != 0) {
    return absl::InvalidArgumentError("grid size must be a power of two");
  }
  double lo_sum = 0.0;
  double mean_sum = 0.0;
  double variance_sum = 0.0;
  for (const GridTerm& term : terms) {
    if (term.count < 1) {
      return absl::InvalidArgumentError("convolution counts must be >= 1");
    }
    if (term.grid->size() != base_n || term.grid->step() != h) {
      return absl::InvalidArgumentError(
          "all grids must share the lattice step and size");
    }
    const double c = static_cast<double>(term.count);
    lo_sum += c * term.grid->lo();
    mean_sum += c * term.grid->Mean();
    variance_sum += c * term.grid->Variance();
  }
  for (size_t n = base_n; n <= options.max_grid_size; n *= 2) {
    // Index j of the circular sum represents lo_sum + j h modulo n h. Choose
    // the integer shift that centers the output window on the mean.
    const double half_width = 0.5 * static_cast<double>(n) * h;
    const double shift_real = std::round((mean_sum - half_width - lo_sum) / h);
    const int64_t shift = static_cast<int64_t>(shift_real);
    std::vector<double> mass = Rotate(CircularSum(terms, n, 0.0), shift);
    // Signed sums let roundoff cancel in the nearly empty outer bands.
    const size_t band = n / 16;
    double outer = 0.0;
    for (size_t k = 0; k < band; ++k) outer += mass[k] + mass[n - 1 - k];
    for (double& w : mass) w = std::max(0.0, w);
    if (outer > options.tail_tolerance) continue;
    const double lo = lo_sum + shift_real * h;
    if (options.tail_tilt > 0.0 && variance_sum > 0.0) {
      // Roundoff in a transform is proportional to its largest entry, so each
      // cell is taken from the sum whose untilted roundoff floor is lowest.
      const double theta = options.tail_tilt / std::sqrt(variance_sum);
      std::vector<double> floor(n, *std::max_element(mass.begin(), mass.end()));
      for (double sign : {1.0, -1.0}) {
        // A tilted sum that reaches the window edge wraps around; weaker
        // tilts are tried before giving up on this side.
        std::vector<double> tilted;
        double tilted_peak = 0.0;
        double tilt = sign * theta;
        for (int attempt = 0; attempt < 4; ++attempt, tilt *= 0.5) {
          tilted = Rotate(CircularSum(terms, n, tilt), shift);
          double total = 0.0;
          double edge_mass = 0.0;
          for (size_t k = 0; k < n; ++k) {
            const double w = tilted[k];
            total += w;
            if (k < band || k >= n - band) edge_mass += w;
          }
          tilted_peak = *std::max_element(tilted.begin(), tilted.end());
          if (std::isfinite(total) && tilted_peak > 0.0 &&
              edge_mass <= options.tail_tolerance * total) {
            break;
          }
          tilted_peak = 0.0;
        }
        if (!(tilted_peak > 0.0)) continue;
        // Each tilt serves its own side of the mean; the other side of the
        // tilted sum holds wrapped-around mass.
        for (size_t k = 0; k < n; ++k) {
          const double x = lo + h * static_cast<double>(k) - mean_sum;
          if (sign * x <= 0.0) continue;
          const double untilt = std::exp(-tilt * x);
          if (tilted_peak * untilt < floor[k]) {
            floor[k] = tilted_peak * untilt;
            mass[k] = std::max(0.0, tilted[k] * untilt);
          }
        }
      }
    }
    return GridDensity::Create(lo, h, std::move(mass));
  }
  return absl::ResourceExhaustedError(absl::StrFormat(
      "convolution window overflow: more than %g of the mass reaches the "
      "window edge at the grid size cap %d",
      options.tail_tolerance, options.max_grid_size));
}

absl::StatusOr<GridDensity> ConvolveMFold(const GridDensity& step, int64_t m,
                                          const ConvolutionOptions& options) {
  if (m < 1) return absl::InvalidArgumentError("m must be >= 1");
  const GridTerm term{&step, m};
  return ConvolveComposition(std::span<const GridTerm>(&term, 1), options);
}

absl::StatusOr<GridDensity> OracleSumLaw(
    std::span<const CompositionEntry> composition, PllrBranch branch,
    PllrVariable variable, Rounding rounding, const OracleOptions& options) {
  if (composition.empty()) {
    return absl::InvalidArgumentError("composition must contain a step");
  }
  std::vector<PllrDistribution> laws;
  std::vector<int64_t> counts;
  double mean = 0.0;
  double variance = 0.0;
  double extent = 0.0;
  double min_sd = std::numeric_limits<double>::infinity();
  for (const CompositionEntry& entry : composition) {
    if (entry.count < 1) {
      return absl::InvalidArgumentError("composition counts must be >= 1");
    }
    if (entry.spec.is_identity()) continue;
    if (!entry.spec.SupportsBranch(branch)) continue;
    auto law = PllrLaw(entry.spec, branch, variable);
    if (!law.ok()) return law.status();
    auto profile = PllrMoments(entry.spec, branch, variable);
    if (!profile.ok()) return profile.status();
    const double c = static_cast<double>(entry.count);
    mean += c * profile->mean;
    variance += c * profile->variance();
    min_sd = std::min(min_sd, std::sqrt(profile->variance()));
    const auto [lo, hi] = law->EffectiveSupport(1e-18);
    extent = std::max(extent, hi - lo);
    laws.push_back(*std::move(law));
    counts.push_back(entry.count);
  }
  if (laws.empty()) {
    return GridDensity::Create(0.0, 1.0, std::vector<double>{1.0});
  }
  const double half_width =
      std::max(options.window_sigmas * std::sqrt(variance), 0.6 * extent);
  size_t n = options.grid_size;
  while (2.0 * half_width / static_cast<double>(n) > min_sd / options.resolution &&
         n < options.max_grid_size) {
    n *= 2;
  }
  const double h = 2.0 * half_width / static_cast<double>(n);
  std::vector<GridDensity> grids;
  grids.reserve(laws.size());
  for (const PllrDistribution& law : laws) {
    const auto [lo, hi] = law.EffectiveSupport(1e-18);
    const double origin = std::floor(lo / h) * h;
    auto grid = DiscretizeLaw(law, origin, h, n, rounding);
    if (!grid.ok()) return grid.status();
    grids.push_back(*std::move(grid));
  }
  std::vector<GridTerm> terms;
  for (size_t i = 0; i < grids.size(); ++i) terms.push_back({&grids[i], counts[i]});
  ConvolutionOptions convolution;
  convolution.max_grid_size = options.max_grid_size;
  convolution.tail_tolerance = options.tail_tolerance;
  convolution.tail_tilt = options.tail_tilt;
  (void)mean;
  return ConvolveComposition(terms, convolution);
}

GridPrivacyCurve::GridPrivacyCurve(const GridDensity& y_sum)
    : lo_(y_sum.lo()), step_(y_sum.step()), shift_(0.0) {
  const size_t n = y_sum.size();
  points_.resize(n);
  suffix_mass_.assign(n + 1, 0.0);
  suffix_weighted_.assign(n + 1, 0.0);
  for (size_t k = 0; k < n; ++k) points_[k] = y_sum.point(k);
  const double total = y_sum.TotalMass();
  const double scale = total > 0.0 ? 1.0 / total : 1.0;
  for (size_t k = n; k-- > 0;) {
    const double w = y_sum.mass()[k] * scale;
    suffix_mass_[k] = suffix_mass_[k + 1] + w;
    const double weighted = points_[k] >= shift_ ? w * std::exp(shift_ - points_[k]) : 0.0;
    suffix_weighted_[k] = suffix_weighted_[k + 1] + weighted;
  }
}

double GridPrivacyCurve::Delta(double epsilon) const {
  const size_t n = points_.size();
  // First index with y_k > epsilon.
  const size_t first = static_cast<size_t>(
      std::upper_bound(points_.begin(), points_.end(), epsilon) -
      points_.begin());
  if (first >= n) return 0.0;
  if (epsilon >= shift_) {
    return std::clamp(suffix_mass_[first] -
                          std::exp(epsilon - shift_) * suffix_weighted_[first],
                      0.0, 1.0);
  }
  double total = 0.0;
  for (size_t k = first; k < n; ++k) {
    total += (suffix_mass_[k] - suffix_mass_[k + 1]) *
             (1.0 - std::exp(epsilon - points_[k]));
  }
  return std::clamp(total, 0.0, 1.0);
}

absl::StatusOr<OracleAccountant> OracleAccountant::Create(
    std::span<const CompositionEntry> composition, const OracleOptions& options) {
  if (composition.empty()) {
    return absl::InvalidArgumentError("composition must contain a step");
  }
  OracleAccountant oracle;
  bool any_active = false;
  bool any_inverse = false;
  for (const CompositionEntry& entry : composition) {
    if (!entry.spec.is_identity()) any_active = true;
    if (entry.spec.SupportsBranch(PllrBranch::kInverse)) any_inverse = true;
  }
  if (!any_active) {
    oracle.degenerate_ = true;
    return oracle;
  }
  std::vector<PllrBranch> branches = {PllrBranch::kPrimary};
  if (any_inverse) branches.push_back(PllrBranch::kInverse);
  for (PllrBranch branch : branches) {
    auto nearest = OracleSumLaw(composition, branch, PllrVariable::kY,
                                Rounding::kNearest, options);
    if (!nearest.ok()) return nearest.status();
    auto down = OracleSumLaw(composition, branch, PllrVariable::kY,
                             Rounding::kDown, options);
    if (!down.ok()) return down.status();
    auto up = OracleSumLaw(composition, branch, PllrVariable::kY, Rounding::kUp,
                           options);
    if (!up.ok()) return up.status();
    oracle.branches_.push_back(Branch{GridPrivacyCurve(*nearest),
                                      GridPrivacyCurve(*down),
                                      GridPrivacyCurve(*up)});
  }
  return oracle;
}

OracleDelta OracleAccountant::Delta(double epsilon) const {
  OracleDelta result;
  if (degenerate_) return result;
  for (const Branch& branch : branches_) {
    result.lower = std::max(result.lower, branch.down.Delta(epsilon));
    result.estimate = std::max(result.estimate, branch.nearest.Delta(epsilon));
    result.upper = std::max(result.upper, branch.up.Delta(epsilon));
  }
  return result;
}

std::function<double(double)> CfModulus(const GridDensity& step_density,
                                        int64_t m) {
  const double mean = step_density.Mean();
  const double b = std::sqrt(static_cast<double>(m) * step_density.Variance());
  auto offsets = std::make_shared<std::vector<double>>();
  auto weights = std::make_shared<std::vector<double>>();
  const double total = step_density.TotalMass();
  for (size_t k = 0; k < step_density.size(); ++k) {
    const double w = step_density.mass()[k] / total;
    if (w > 1e-18) {
      offsets->push_back(step_density.point(k) - mean);
      weights->push_back(w);
    }
  }
  return [offsets, weights, b, m](double t) {
    if (t == 0.0 || !(b > 0.0)) return 1.0;
    const double s = t / b;
    double re = 0.0;
    double im = 0.0;
    for (size_t k = 0; k < offsets->size(); ++k) {
      const double angle = s * (*offsets)[k];
      re += (*weights)[k] * std::cos(angle);
      im += (*weights)[k] * std::sin(angle);
    }
    const double modulus = std::min(1.0, std::hypot(re, im));
    return std::pow(modulus, static_cast<double>(m));
  };
}

int WorkerCount() {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (const char* cap = std::getenv("EA_NUM_THREADS"); cap != nullptr) {
    const int limit = std::atoi(cap);
    if (limit >= 1) workers = std::min(workers, limit);
  }
  return workers;
}

}  // namespace edgeworth_accountant
