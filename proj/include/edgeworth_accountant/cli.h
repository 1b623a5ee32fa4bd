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

// Command-line front end. Subcommands:
//
//   delta    delta(eps) at one eps
//   epsilon  eps(delta) at one delta
//   curve    either of the above over an m grid, with a p scaling rule
//   bounds   error-bound diagnostics at one eps (eeai)
//
// Exit codes: 0 success, 2 parameter error, 3 numeric failure.

#ifndef EDGEWORTH_ACCOUNTANT_CLI_H_
#define EDGEWORTH_ACCOUNTANT_CLI_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace edgeworth_accountant {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParameterError = 2;
inline constexpr int kExitNumericError = 3;

inline constexpr std::string_view kSchemaVersion = "1";

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

// Maps a status to the documented exit codes.
int ExitCodeForStatus(const absl::Status& status);

// Parses "start:stop:count" with an optional "-log" (default) or "-lin"
// suffix on the count. Points are rounded to integers and deduplicated.
absl::StatusOr<std::vector<int64_t>> ParseMGrid(std::string_view text);

// Parses a p scaling rule: "fixed:<v>", "<c>/sqrt(m)", "<c>/sqrt(m*log(m))"
// or "<c>*sqrt(log(m)/m)". The returned function maps m to p.
absl::StatusOr<std::function<double(int64_t)>> ParsePRule(std::string_view text);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace edgeworth_accountant

#endif  // EDGEWORTH_ACCOUNTANT_CLI_H_
