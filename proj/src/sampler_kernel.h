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

#ifndef EDGEWORTH_ACCOUNTANT_SAMPLER_KERNEL_H_
#define EDGEWORTH_ACCOUNTANT_SAMPLER_KERNEL_H_

#include <cstddef>
#include <cstdint>

namespace edgeworth_accountant::internal {

struct SamplerParams {
  bool laplace = false;
  double mu = 0.0;
  double p = 1.0;
  double shift_weight = 0.0;
  double sign = 1.0;
};

// SplitMix64 finalizer.
inline uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Writes into sums[i] the sum of m PLLR draws for sample index first + i,
// i < count. Sample s uses the uniform stream Mix64(key_s + c * kGolden) with
// key_s = Mix64(seed ^ Mix64(s)); the result depends only on (seed, s).
void AccumulateSums(const SamplerParams& params, uint64_t seed, int64_t first,
                    size_t count, int64_t m, double* sums);

}  // namespace edgeworth_accountant::internal

#endif  // EDGEWORTH_ACCOUNTANT_SAMPLER_KERNEL_H_
