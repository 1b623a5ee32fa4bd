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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "edgeworth_accountant/oracle.h"
#include "sampler_kernel.h"

namespace edgeworth_accountant {
namespace {

constexpr int64_t kMinSamples = 10000;
constexpr int64_t kChunk = 1 << 16;

absl::StatusOr<internal::SamplerParams> MakeParams(const MechanismSpec& spec,
                                                   PllrBranch branch,
                                                   PllrVariable variable,
                                                   int64_t m) {
  if (m < 1) return absl::InvalidArgumentError("m must be >= 1");
  auto law = PllrLaw(spec, branch, variable);
  if (!law.ok()) return law.status();
  internal::SamplerParams params;
  params.laplace = law->family() == PllrDistribution::BaseFamily::kLaplace;
  params.mu = law->mu();
  params.p = law->p();
  params.shift_weight = law->shift_weight();
  params.sign = static_cast<double>(law->sign());
  return params;
}

}  // namespace

absl::StatusOr<std::vector<McEstimate>> McTails(
    const MechanismSpec& spec, PllrBranch branch, PllrVariable variable,
    int64_t m, std::span<const double> thresholds, int64_t n_samples,
    uint64_t seed) {
  if (n_samples < kMinSamples) {
    return absl::InvalidArgumentError(
        absl::StrFormat("n_samples must be >= %d, got %d", kMinSamples, n_samples));
  }
  for (double t : thresholds) {
    if (std::isnan(t)) return absl::InvalidArgumentError("threshold is NaN");
  }
  auto params = MakeParams(spec, branch, variable, m);
  if (!params.ok()) return params.status();

  const size_t k = thresholds.size();
  std::vector<size_t> order(k);
  for (size_t i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return thresholds[a] < thresholds[b]; });
  std::vector<double> sorted(k);
  for (size_t i = 0; i < k; ++i) sorted[i] = thresholds[order[i]];

  const int64_t chunks = (n_samples + kChunk - 1) / kChunk;
  const int workers = static_cast<int>(
      std::min<int64_t>(WorkerCount(), chunks));
  std::vector<std::vector<int64_t>> partial(workers, std::vector<int64_t>(k + 1, 0));
  std::atomic<int64_t> next{0};
  auto work = [&](int worker) {
    std::vector<double> sums(kChunk);
    std::vector<int64_t>& counts = partial[worker];
    for (int64_t chunk = next++; chunk < chunks; chunk = next++) {
      const int64_t first = chunk * kChunk;
      const size_t count =
          static_cast<size_t>(std::min<int64_t>(kChunk, n_samples - first));
      internal::AccumulateSums(*params, seed, first, count, m, sums.data());
      // counts[i] collects sums that clear exactly the first i thresholds.
      for (size_t s = 0; s < count; ++s) {
        const size_t cleared = static_cast<size_t>(
            std::upper_bound(sorted.begin(), sorted.end(), sums[s]) -
            sorted.begin());
        ++counts[cleared];
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(work, w);
  work(0);
  for (std::thread& t : threads) t.join();

  std::vector<int64_t> counts(k + 1, 0);
  for (const auto& c : partial) {
    for (size_t i = 0; i <= k; ++i) counts[i] += c[i];
  }
  // A sum clears threshold i when it is >= sorted[i], i.e. when it falls in
  // a bucket above i.
  std::vector<McEstimate> result(k);
  int64_t above = 0;
  const double n = static_cast<double>(n_samples);
  for (size_t i = k; i-- > 0;) {
    above += counts[i + 1];
    const double q = static_cast<double>(above) / n;
    result[order[i]] = McEstimate{q, std::sqrt(q * (1.0 - q) / n)};
  }
  return result;
}

absl::StatusOr<McEstimate> McTail(const MechanismSpec& spec, PllrBranch branch,
                                  PllrVariable variable, int64_t m,
                                  double threshold, int64_t n_samples,
                                  uint64_t seed) {
  auto tails = McTails(spec, branch, variable, m,
                       std::span<const double>(&threshold, 1), n_samples, seed);
  if (!tails.ok()) return tails.status();
  return tails->front();
}

absl::Status SampleSums(
    const MechanismSpec& spec, PllrBranch branch, PllrVariable variable,
    int64_t m, int64_t n_samples, uint64_t seed,
    const std::function<void(std::span<const double>)>& consume) {
  if (n_samples < 1) return absl::InvalidArgumentError("n_samples must be >= 1");
  auto params = MakeParams(spec, branch, variable, m);
  if (!params.ok()) return params.status();
  std::vector<double> sums(kChunk);
  for (int64_t first = 0; first < n_samples; first += kChunk) {
    const size_t count =
        static_cast<size_t>(std::min<int64_t>(kChunk, n_samples - first));
    internal::AccumulateSums(*params, seed, first, count, m, sums.data());
    consume(std::span<const double>(sums.data(), count));
  }
  return absl::OkStatus();
}

}  // namespace edgeworth_accountant
