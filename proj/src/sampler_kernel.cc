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

// Built with fast-math so that the inner loops vectorize. Nothing here sees
// infinities or NaNs: uniforms lie in (0, 1] and every transform is finite.

#include "sampler_kernel.h"

#include <algorithm>
#include <cmath>

namespace edgeworth_accountant::internal {
namespace {

constexpr size_t kLanes = 256;
constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double Unit(uint64_t key, uint64_t counter) {
  const uint64_t bits = Mix64(key + counter * kGolden);
  return static_cast<double>(static_cast<int64_t>(bits >> 11) + 1) * 0x1p-53;
}

inline double Pllr(double p, double z) {
  return std::log(1.0 - p + p * std::exp(z));
}

void GaussianBlock(const SamplerParams& params, const uint64_t* keys,
                   size_t lanes, int64_t m, double* sums) {
  const double mu = params.mu;
  const double half_mu_sq = 0.5 * mu * mu;
  const double p = params.p;
  const double w = params.shift_weight;
  const double sign = params.sign;
  const bool pure = p == 1.0;
  const uint64_t selection_base = 2 * static_cast<uint64_t>((m + 1) / 2);
  double radius[kLanes];
  double angle[kLanes];
  double first[kLanes];
  double second[kLanes];
  for (int64_t j = 0; j < m; j += 2) {
    const uint64_t c = static_cast<uint64_t>(j);
    // Separate loops keep cos and sin from fusing into a scalar sincos.
    for (size_t b = 0; b < lanes; ++b) {
      radius[b] = std::sqrt(-2.0 * std::log(Unit(keys[b], c)));
      angle[b] = kTwoPi * Unit(keys[b], c + 1);
    }
    for (size_t b = 0; b < lanes; ++b) first[b] = radius[b] * std::cos(angle[b]);
    for (size_t b = 0; b < lanes; ++b) second[b] = radius[b] * std::sin(angle[b]);
    const int64_t steps = std::min<int64_t>(2, m - j);
    for (int64_t s = 0; s < steps; ++s) {
      const double* normal = s == 0 ? first : second;
      const uint64_t sc = selection_base + c + static_cast<uint64_t>(s);
      if (pure) {
        for (size_t b = 0; b < lanes; ++b) {
          double base = normal[b];
          if (w > 0.0) base += Unit(keys[b], sc) <= w ? mu : 0.0;
          sums[b] += sign * (mu * base - half_mu_sq);
        }
      } else {
        for (size_t b = 0; b < lanes; ++b) {
          double base = normal[b];
          if (w > 0.0) base += Unit(keys[b], sc) <= w ? mu : 0.0;
          sums[b] += sign * Pllr(p, mu * base - half_mu_sq);
        }
      }
    }
  }
}

void LaplaceBlock(const SamplerParams& params, const uint64_t* keys,
                  size_t lanes, int64_t m, double* sums) {
  const double mu = params.mu;
  const double p = params.p;
  const double w = params.shift_weight;
  const double sign = params.sign;
  const uint64_t selection_base = static_cast<uint64_t>(m);
  for (int64_t j = 0; j < m; ++j) {
    const uint64_t c = static_cast<uint64_t>(j);
    for (size_t b = 0; b < lanes; ++b) {
      // Inverse CDF of the standard Laplace law from one uniform in (0, 1].
      const double u = Unit(keys[b], c);
      const double t = 2.0 * u - 1.0;
      const double magnitude = -std::log(1.0 - std::fabs(t) + 0x1p-54);
      double base = t < 0.0 ? -magnitude : magnitude;
      if (w > 0.0) base += Unit(keys[b], selection_base + c) <= w ? mu : 0.0;
      const double h = std::clamp(2.0 * base - mu, -mu, mu);
      sums[b] += sign * Pllr(p, h);
    }
  }
}

}  // namespace

void AccumulateSums(const SamplerParams& params, uint64_t seed, int64_t first,
                    size_t count, int64_t m, double* sums) {
  uint64_t keys[kLanes];
  for (size_t start = 0; start < count; start += kLanes) {
    const size_t lanes = std::min(kLanes, count - start);
    for (size_t b = 0; b < lanes; ++b) {
      const uint64_t index = static_cast<uint64_t>(first) + start + b;
      keys[b] = Mix64(seed ^ Mix64(index));
      sums[start + b] = 0.0;
    }
    if (params.laplace) {
      LaplaceBlock(params, keys, lanes, m, sums + start);
    } else {
      GaussianBlock(params, keys, lanes, m, sums + start);
    }
  }
}

}  // namespace edgeworth_accountant::internal
