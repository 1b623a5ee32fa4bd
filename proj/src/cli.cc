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

#include "edgeworth_accountant/cli.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "edgeworth_accountant/accountant.h"
#include "edgeworth_accountant/bounds.h"
#include "edgeworth_accountant/mechanisms.h"
#include "edgeworth_accountant/oracle.h"
#include "json.hpp"

namespace edgeworth_accountant {
namespace {

using Json = nlohmann::ordered_json;

struct Flags {
  std::string mechanism = "subsampled-gaussian";
  int64_t m = 0;
  double p = 0.0;
  double sigma = 0.0;
  double mu = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  int order = 0;
  std::string mode = "aea";
  double smoothing_eps = kDefaultSmoothingEps;
  std::string format = "json";
  std::string out;
  uint64_t seed = 0;
  std::string m_grid;
  std::string p_rule;
  bool no_tail_bounds = false;
  bool omit_timing = false;
  int64_t mc_samples = 0;
  int64_t oracle_grid_size = int64_t{1} << 20;
};

// Whether each optional flag was given.
struct Given {
  bool m, p, sigma, mu, eps, delta, order, m_grid, p_rule;
};

absl::StatusOr<MechanismKind> ParseMechanism(std::string_view name) {
  for (MechanismKind kind :
       {MechanismKind::kSubsampledGaussian, MechanismKind::kSubsampledLaplace,
        MechanismKind::kPureGaussian}) {
    if (name == MechanismKindName(kind)) return kind;
  }
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown mechanism '%s' (expected subsampled-gaussian|subsampled-laplace|"
      "gaussian)",
      std::string(name)));
}

Json Number(std::optional<double> v) {
  if (!v.has_value() || !std::isfinite(*v)) return nullptr;
  return *v;
}

std::string CsvField(std::optional<double> v) {
  if (!v.has_value() || !std::isfinite(*v)) return "";
  return FormatDouble(*v);
}

// Resolved per-invocation settings shared by the subcommands.
struct Setup {
  MechanismKind kind = MechanismKind::kSubsampledGaussian;
  double mu = 0.0;
  AccountantMode mode = AccountantMode::kAea;
  int order = 2;
  AccountantOptions options;
};

absl::StatusOr<Setup> Resolve(const Flags& flags, const Given& given) {
  Setup setup;
  auto kind = ParseMechanism(flags.mechanism);
  if (!kind.ok()) return kind.status();
  setup.kind = *kind;
  if (given.sigma && given.mu) {
    return absl::InvalidArgumentError("--sigma and --mu are mutually exclusive");
  }
  if (!given.sigma && !given.mu) {
    return absl::InvalidArgumentError("one of --sigma or --mu is required");
  }
  if (given.sigma) {
    if (!(flags.sigma > 0.0) || !std::isfinite(flags.sigma)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("--sigma must be positive and finite, got %g", flags.sigma));
    }
    setup.mu = 1.0 / flags.sigma;
  } else {
    setup.mu = flags.mu;
  }
  auto mode = ParseAccountantMode(flags.mode);
  if (!mode.ok()) return mode.status();
  setup.mode = *mode;
  int default_order = 2;
  if (setup.mode == AccountantMode::kEeai) default_order = 1;
  if (setup.mode == AccountantMode::kClt) default_order = 0;
  setup.order = given.order ? flags.order : default_order;
  setup.options.smoothing_eps = flags.smoothing_eps;
  setup.options.use_tail_bounds = !flags.no_tail_bounds;
  if (flags.oracle_grid_size < 2 ||
      (flags.oracle_grid_size & (flags.oracle_grid_size - 1)) != 0) {
    return absl::InvalidArgumentError("--oracle-grid-size must be a power of two");
  }
  setup.options.oracle.grid_size = static_cast<size_t>(flags.oracle_grid_size);
  setup.options.oracle.max_grid_size =
      std::max(setup.options.oracle.max_grid_size, setup.options.oracle.grid_size);
  return setup;
}

absl::StatusOr<double> ResolveP(const Setup& setup, const Flags& flags,
                                const Given& given) {
  if (setup.kind == MechanismKind::kPureGaussian) {
    if (given.p && flags.p != 1.0) {
      return absl::InvalidArgumentError("the gaussian mechanism requires --p 1");
    }
    return 1.0;
  }
  if (!given.p) return absl::InvalidArgumentError("--p is required");
  return flags.p;
}

absl::StatusOr<AccountantRequest> BuildRequest(const Setup& setup, double p,
                                               int64_t m) {
  if (m < 1) return absl::InvalidArgumentError(absl::StrFormat("--m must be >= 1, got %d", m));
  auto spec = MechanismSpec::Create(setup.kind, setup.mu, p);
  if (!spec.ok()) return spec.status();
  return AccountantRequest::Create({{*spec, m}}, setup.mode, setup.order,
                                   setup.options);
}

Json RequestEcho(const std::string& command, const Flags& flags,
                 const Given& given, const Setup& setup) {
  Json r;
  r["command"] = command;
  r["mechanism"] = flags.mechanism;
  if (given.m) r["m"] = flags.m; else r["m"] = nullptr;
  if (!given.p_rule && (given.p || setup.kind == MechanismKind::kPureGaussian)) {
    r["p"] = setup.kind == MechanismKind::kPureGaussian ? 1.0 : flags.p;
  } else {
    r["p"] = nullptr;
  }
  if (given.sigma) r["sigma"] = flags.sigma; else r["sigma"] = nullptr;
  r["mu"] = setup.mu;
  r["order"] = setup.order;
  r["mode"] = std::string(AccountantModeName(setup.mode));
  r["smoothing_eps"] = setup.options.smoothing_eps;
  r["seed"] = flags.seed;
  if (given.eps) r["eps"] = flags.eps;
  if (given.delta) r["delta"] = flags.delta;
  if (given.m_grid) r["m_grid"] = flags.m_grid;
  if (given.p_rule) r["p_rule"] = flags.p_rule;
  r["tail_bounds"] = setup.options.use_tail_bounds;
  if (setup.mode == AccountantMode::kOracle) {
    r["oracle_grid_size"] = flags.oracle_grid_size;
  }
  return r;
}

Json DeltaRow(int64_t m, const PrivacyPoint& point) {
  Json row;
  row["m"] = m;
  row["epsilon"] = point.epsilon;
  row["delta_lower"] = Number(point.delta_lower);
  row["delta_est"] = point.delta_est;
  row["delta_upper"] = Number(point.delta_upper);
  return row;
}

Json EpsilonRow(int64_t m, const EpsilonInterval& interval) {
  Json row;
  row["m"] = m;
  row["eps_lower"] = Number(interval.eps_lower);
  row["eps_est"] = interval.eps_est;
  row["eps_upper"] = Number(interval.eps_upper);
  return row;
}

std::string CsvRow(const Json& row, const std::vector<std::string>& columns) {
  std::string line;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) line += ',';
    const Json& v = row.at(columns[i]);
    if (v.is_null()) continue;
    if (v.is_number_float()) {
      line += CsvField(v.get<double>());
    } else if (v.is_number_integer()) {
      line += std::to_string(v.get<int64_t>());
    } else if (v.is_string()) {
      // RFC 4180 quoting.
      std::string s = v.get<std::string>();
      std::string quoted = "\"";
      for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      line += quoted + "\"";
    } else {
      line += v.dump();
    }
  }
  return line + "\r\n";
}

struct Record {
  std::string command;
  Json request;
  Json results = Json::array();
  std::vector<std::string> diagnostics;
  std::vector<std::string> columns;
};

absl::Status Emit(const Record& record, const Flags& flags, int64_t timing_ms,
                  std::ostream& out) {
  std::string text;
  if (flags.format == "csv") {
    for (size_t i = 0; i < record.columns.size(); ++i) {
      if (i > 0) text += ',';
      text += record.columns[i];
    }
    text += "\r\n";
    for (const Json& row : record.results) text += CsvRow(row, record.columns);
  } else {
    Json doc;
    doc["schema_version"] = std::string(kSchemaVersion);
    doc["request"] = record.request;
    doc["results"] = record.results;
    doc["timing_ms"] = flags.omit_timing ? 0 : timing_ms;
    doc["diagnostics"] = record.diagnostics;
    text = doc.dump(2) + "\n";
  }
  if (flags.out.empty()) {
    out << text;
    return absl::OkStatus();
  }
  std::ofstream file(flags.out, std::ios::binary);
  if (!file) {
    return absl::InvalidArgumentError(
        absl::StrFormat("cannot open --out path '%s'", flags.out));
  }
  file << text;
  if (!file) return absl::InternalError("failed writing output file");
  return absl::OkStatus();
}

absl::Status RunDelta(const Flags& flags, const Given& given, Record& record) {
  auto setup = Resolve(flags, given);
  if (!setup.ok()) return setup.status();
  record.request = RequestEcho("delta", flags, given, *setup);
  if (!given.eps) return absl::InvalidArgumentError("--eps is required");
  if (!given.m) return absl::InvalidArgumentError("--m is required");
  auto p = ResolveP(*setup, flags, given);
  if (!p.ok()) return p.status();
  auto request = BuildRequest(*setup, *p, flags.m);
  if (!request.ok()) return request.status();
  auto point = DeltaAtEpsilon(*request, flags.eps);
  if (!point.ok()) return point.status();
  record.results.push_back(DeltaRow(flags.m, *point));
  record.columns = {"m", "epsilon", "delta_lower", "delta_est", "delta_upper"};
  return absl::OkStatus();
}

absl::Status CheckDelta(const Flags& flags) {
  if (!(flags.delta > 0.0 && flags.delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("--delta must lie in (0, 1), got %g", flags.delta));
  }
  return absl::OkStatus();
}

absl::Status RunEpsilon(const Flags& flags, const Given& given, Record& record) {
  auto setup = Resolve(flags, given);
  if (!setup.ok()) return setup.status();
  record.request = RequestEcho("epsilon", flags, given, *setup);
  if (!given.delta) return absl::InvalidArgumentError("--delta is required");
  if (auto s = CheckDelta(flags); !s.ok()) return s;
  if (!given.m) return absl::InvalidArgumentError("--m is required");
  auto p = ResolveP(*setup, flags, given);
  if (!p.ok()) return p.status();
  auto request = BuildRequest(*setup, *p, flags.m);
  if (!request.ok()) return request.status();
  auto interval = EpsilonAtDelta(*request, flags.delta);
  if (!interval.ok()) return interval.status();
  record.results.push_back(EpsilonRow(flags.m, *interval));
  for (const std::string& d : interval->diagnostics) record.diagnostics.push_back(d);
  record.columns = {"m", "eps_lower", "eps_est", "eps_upper"};
  return absl::OkStatus();
}

absl::Status RunCurve(const Flags& flags, const Given& given, Record& record) {
  auto setup = Resolve(flags, given);
  if (!setup.ok()) return setup.status();
  record.request = RequestEcho("curve", flags, given, *setup);
  if (!given.m_grid) return absl::InvalidArgumentError("--m-grid is required");
  if (given.eps == given.delta) {
    return absl::InvalidArgumentError("curve needs exactly one of --eps or --delta");
  }
  if (given.delta) {
    if (auto s = CheckDelta(flags); !s.ok()) return s;
  }
  auto grid = ParseMGrid(flags.m_grid);
  if (!grid.ok()) return grid.status();
  std::function<double(int64_t)> rule;
  if (given.p_rule) {
    if (given.p) return absl::InvalidArgumentError("--p and --p-rule are mutually exclusive");
    if (setup->kind == MechanismKind::kPureGaussian) {
      return absl::InvalidArgumentError("--p-rule needs a subsampled mechanism");
    }
    auto parsed = ParsePRule(flags.p_rule);
    if (!parsed.ok()) return parsed.status();
    rule = *parsed;
  } else {
    auto p = ResolveP(*setup, flags, given);
    if (!p.ok()) return p.status();
    const double fixed = *p;
    rule = [fixed](int64_t) { return fixed; };
  }
  std::vector<AccountantRequest> requests;
  for (int64_t m : *grid) {
    auto request = BuildRequest(*setup, rule(m), m);
    if (!request.ok()) {
      return absl::Status(request.status().code(),
                          absl::StrFormat("m=%d: %s", m, request.status().message()));
    }
    requests.push_back(*std::move(request));
  }
  PrivacyTarget target;
  target.kind = given.eps ? PrivacyTarget::Kind::kEpsilon : PrivacyTarget::Kind::kDelta;
  target.value = given.eps ? flags.eps : flags.delta;
  const std::vector<CurvePoint> points = EvaluateRequests(requests, *grid, target);
  absl::Status first_error = absl::OkStatus();
  for (const CurvePoint& point : points) {
    if (!point.value.ok()) {
      record.diagnostics.push_back(
          absl::StrFormat("m=%d: %s", point.m, point.value.status().ToString()));
      if (first_error.ok()) first_error = point.value.status();
      Json row;
      row["m"] = point.m;
      if (target.kind == PrivacyTarget::Kind::kEpsilon) {
        row["epsilon"] = target.value;
        row["delta_lower"] = nullptr;
        row["delta_est"] = nullptr;
        row["delta_upper"] = nullptr;
      } else {
        row["eps_lower"] = nullptr;
        row["eps_est"] = nullptr;
        row["eps_upper"] = nullptr;
      }
      record.results.push_back(row);
      continue;
    }
    if (const auto* p = std::get_if<PrivacyPoint>(&*point.value)) {
      record.results.push_back(DeltaRow(point.m, *p));
    } else {
      const auto& interval = std::get<EpsilonInterval>(*point.value);
      record.results.push_back(EpsilonRow(point.m, interval));
      for (const std::string& d : interval.diagnostics) {
        record.diagnostics.push_back(absl::StrFormat("m=%d: %s", point.m, d));
      }
    }
  }
  if (target.kind == PrivacyTarget::Kind::kEpsilon) {
    record.columns = {"m", "epsilon", "delta_lower", "delta_est", "delta_upper"};
  } else {
    record.columns = {"m", "eps_lower", "eps_est", "eps_upper"};
  }
  return first_error;
}

Json StatsJson(const CompositionStats& s) {
  Json j;
  j["m"] = s.m;
  j["mean"] = s.mean;
  j["b"] = s.b;
  j["lambda3"] = s.lambda3;
  j["lambda4"] = s.lambda4;
  j["k3"] = s.k3;
  j["k3_tilde"] = s.k3_tilde;
  j["k4"] = s.k4;
  return j;
}

absl::StatusOr<Json> UniformJson(const CompositionStats& stats, double smoothing_eps) {
  Json j;
  if (stats.degenerate) return Json(nullptr);
  auto inputs = UniformBoundInputs::Create(stats, smoothing_eps);
  if (!inputs.ok()) return inputs.status();
  auto r1 = ComputeRemainderR1(*inputs);
  if (!r1.ok()) return r1.status();
  const double leading = UniformBoundLeadingTerms(*inputs);
  j["leading"] = leading;
  j["r1_smoothing"] = Number(r1->smoothing);
  j["r1_exponential"] = Number(r1->exponential);
  j["r1_i32"] = Number(r1->i32);
  j["r1_i33"] = Number(r1->i33);
  j["r1_integral"] = Number(r1->r1_integral);
  j["total"] = Number(leading + r1->total());
  return j;
}

absl::Status RunBounds(const Flags& flags, const Given& given, Record& record) {
  auto setup = Resolve(flags, given);
  if (!setup.ok()) return setup.status();
  record.request = RequestEcho("bounds", flags, given, *setup);
  if (setup->mode != AccountantMode::kEeai) {
    if (flags.mode != "aea" || given.order) {
      return absl::InvalidArgumentError("bounds diagnostics need --mode eeai");
    }
    setup->mode = AccountantMode::kEeai;
    setup->order = 1;
    record.request["mode"] = "eeai";
    record.request["order"] = 1;
  }
  if (!given.eps) return absl::InvalidArgumentError("--eps is required");
  if (!given.m) return absl::InvalidArgumentError("--m is required");
  if (flags.mc_samples != 0 && flags.mc_samples < 10000) {
    return absl::InvalidArgumentError("--mc-samples must be 0 or >= 10000");
  }
  auto p = ResolveP(*setup, flags, given);
  if (!p.ok()) return p.status();
  auto request = BuildRequest(*setup, *p, flags.m);
  if (!request.ok()) return request.status();
  auto accountant = Accountant::Create(*request);
  if (!accountant.ok()) return accountant.status();
  if (accountant->degenerate()) {
    record.diagnostics.push_back("composition is degenerate: all PLLRs are zero");
    record.columns = {"branch"};
    return absl::OkStatus();
  }
  auto diagnostics = accountant->BoundDiagnostics(flags.eps);
  if (!diagnostics.ok()) return diagnostics.status();
  const MechanismSpec spec = request->composition().front().spec;
  for (const BranchBoundDiagnostics& d : *diagnostics) {
    Json row;
    row["branch"] = std::string(PllrBranchName(d.branch));
    row["m"] = flags.m;
    row["epsilon"] = flags.eps;
    row["x_stats"] = StatsJson(d.x_stats);
    row["y_stats"] = StatsJson(d.y_stats);
    auto ux = UniformJson(d.x_stats, setup->options.smoothing_eps);
    if (!ux.ok()) return ux.status();
    auto uy = UniformJson(d.y_stats, setup->options.smoothing_eps);
    if (!uy.ok()) return uy.status();
    row["uniform_x"] = *ux;
    row["uniform_y"] = *uy;
    row["tail_x"] = Number(d.tail_x);
    row["delta_x"] = Number(d.delta_x);
    row["delta_y"] = Number(d.delta_y);
    if (flags.mc_samples > 0) {
      auto mc = McTail(spec, spec.SupportsBranch(d.branch) ? d.branch : PllrBranch::kPrimary,
                       PllrVariable::kX, flags.m, flags.eps, flags.mc_samples,
                       flags.seed);
      if (!mc.ok()) return mc.status();
      row["mc_tail_x"] = mc->estimate;
      row["mc_tail_x_std_error"] = mc->std_error;
    }
    record.results.push_back(row);
  }
  record.columns = {"branch", "m", "epsilon", "tail_x", "delta_x", "delta_y"};
  return absl::OkStatus();
}

}  // namespace

int ExitCodeForStatus(const absl::Status& status) {
  if (status.ok()) return kExitOk;
  switch (status.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
      return kExitParameterError;
    default:
      return kExitNumericError;
  }
}

std::string FormatDouble(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

absl::StatusOr<std::vector<int64_t>> ParseMGrid(std::string_view text) {
  static const std::regex pattern(
      R"(^\s*([0-9.eE+]+)\s*:\s*([0-9.eE+]+)\s*:\s*([0-9]+)(-log|-lin)?\s*$)");
  std::cmatch match;
  const std::string s(text);
  if (!std::regex_match(s.c_str(), match, pattern)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "--m-grid must look like start:stop:count[-log|-lin], got '%s'", std::string(text)));
  }
  double start, stop;
  int64_t count;
  try {
    start = std::stod(match[1].str());
    stop = std::stod(match[2].str());
    count = std::stoll(match[3].str());
  } catch (const std::exception&) {
    return absl::InvalidArgumentError(absl::StrFormat("malformed --m-grid '%s'", std::string(text)));
  }
  const bool linear = match[4].matched && match[4].str() == "-lin";
  if (!(start >= 1.0) || !(stop >= start) || count < 1 || stop > 1e15) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "--m-grid needs 1 <= start <= stop and count >= 1, got '%s'", std::string(text)));
  }
  if (count > 100000) return absl::InvalidArgumentError("--m-grid count is too large");
  if (count == 1 && start != stop) {
    return absl::InvalidArgumentError("--m-grid with one point needs start == stop");
  }
  std::vector<int64_t> grid;
  for (int64_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const double v = linear ? start + t * (stop - start)
                            : std::exp(std::log(start) + t * (std::log(stop) - std::log(start)));
    const int64_t m = static_cast<int64_t>(std::llround(v));
    if (grid.empty() || m != grid.back()) grid.push_back(m);
  }
  if (grid.empty()) return absl::InvalidArgumentError("--m-grid is empty");
  return grid;
}

absl::StatusOr<std::function<double(int64_t)>> ParsePRule(std::string_view text) {
  const std::string s(text);
  static const std::string number = R"(([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))";
  static const std::regex fixed("^fixed:" + number + "$");
  static const std::regex inv_sqrt("^" + number + R"(/sqrt\(m\)$)");
  static const std::regex inv_sqrt_log("^" + number + R"(/sqrt\(m\*log\(m\)\)$)");
  static const std::regex sqrt_log("^" + number + R"(\*sqrt\(log\(m\)/m\)$)");
  std::smatch match;
  auto coefficient = [&]() { return std::stod(match[1].str()); };
  std::function<double(int64_t)> rule;
  try {
    if (std::regex_match(s, match, fixed)) {
      const double v = coefficient();
      rule = [v](int64_t) { return v; };
    } else if (std::regex_match(s, match, inv_sqrt)) {
      const double c = coefficient();
      rule = [c](int64_t m) { return c / std::sqrt(static_cast<double>(m)); };
    } else if (std::regex_match(s, match, inv_sqrt_log)) {
      const double c = coefficient();
      rule = [c](int64_t m) {
        const double md = static_cast<double>(m);
        return c / std::sqrt(md * std::log(md));
      };
    } else if (std::regex_match(s, match, sqrt_log)) {
      const double c = coefficient();
      rule = [c](int64_t m) {
        const double md = static_cast<double>(m);
        return c * std::sqrt(std::log(md) / md);
      };
    }
  } catch (const std::exception&) {
    rule = nullptr;
  }
  if (!rule) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "--p-rule must be fixed:<v>, <c>/sqrt(m), <c>/sqrt(m*log(m)) or "
        "<c>*sqrt(log(m)/m), got '%s'",
        std::string(text)));
  }
  // Values outside [0, 1] are rejected per point when the spec is built.
  return rule;
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"Edgeworth accountant for compositions of subsampled mechanisms",
               "edgeworth-accountant"};
  app.set_config("--config", "", "Read key=value flags from a file; flags win");
  app.require_subcommand(1);
  Flags flags;
  auto* mechanism = app.add_option("--mechanism", flags.mechanism,
                                   "subsampled-gaussian|subsampled-laplace|gaussian");
  (void)mechanism;
  auto* m = app.add_option("--m", flags.m, "Number of composed steps");
  auto* p = app.add_option("--p", flags.p, "Subsampling probability");
  auto* sigma = app.add_option("--sigma", flags.sigma, "Noise scale (mu = 1/sigma)");
  auto* mu = app.add_option("--mu", flags.mu, "Shift of the alternative");
  auto* eps = app.add_option("--eps", flags.eps, "Privacy epsilon");
  auto* delta = app.add_option("--delta", flags.delta, "Privacy delta");
  auto* order = app.add_option("--order", flags.order, "Edgeworth order 0..3");
  app.add_option("--mode", flags.mode, "aea|eeai|oracle|clt");
  app.add_option("--smoothing-eps", flags.smoothing_eps,
                 "Smoothing parameter of the remainder, in (0, 1/3)");
  app.add_option("--format", flags.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", flags.out, "Write output to this path");
  app.add_option("--seed", flags.seed, "Seed for Monte Carlo diagnostics");
  auto* m_grid = app.add_option("--m-grid", flags.m_grid, "start:stop:count[-log|-lin]");
  auto* p_rule = app.add_option("--p-rule", flags.p_rule,
                                "fixed:<v>|<c>/sqrt(m)|<c>/sqrt(m*log(m))|<c>*sqrt(log(m)/m)");
  app.add_flag("--no-tail-bounds", flags.no_tail_bounds,
               "Use the uniform bound only in eeai mode");
  app.add_flag("--omit-timing", flags.omit_timing, "Emit timing_ms as 0");
  app.add_option("--mc-samples", flags.mc_samples,
                 "bounds: Monte Carlo samples for the X tail (0 disables)");
  app.add_option("--oracle-grid-size", flags.oracle_grid_size,
                 "oracle: initial lattice size (power of two)");
  auto* cmd_delta = app.add_subcommand("delta", "delta at one epsilon")->fallthrough();
  auto* cmd_epsilon = app.add_subcommand("epsilon", "epsilon at one delta")->fallthrough();
  auto* cmd_curve = app.add_subcommand("curve", "sweep over an m grid")->fallthrough();
  auto* cmd_bounds = app.add_subcommand("bounds", "error-bound diagnostics")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParameterError;
  }

  const Given given{m->count() > 0,     p->count() > 0,     sigma->count() > 0,
                    mu->count() > 0,    eps->count() > 0,   delta->count() > 0,
                    order->count() > 0, m_grid->count() > 0, p_rule->count() > 0};
  Record record;
  absl::Status status;
  if (cmd_delta->parsed()) {
    record.command = "delta";
    status = RunDelta(flags, given, record);
  } else if (cmd_epsilon->parsed()) {
    record.command = "epsilon";
    status = RunEpsilon(flags, given, record);
  } else if (cmd_curve->parsed()) {
    record.command = "curve";
    status = RunCurve(flags, given, record);
  } else if (cmd_bounds->parsed()) {
    record.command = "bounds";
    status = RunBounds(flags, given, record);
  }
  // A curve with failed points still emits the rows that succeeded.
  const bool emit = status.ok() || (record.command == "curve" && !record.results.empty());
  if (!status.ok()) err << "error: " << status.ToString() << "\n";
  if (emit) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    if (auto s = Emit(record, flags, elapsed.count(), out); !s.ok()) {
      err << "error: " << s.ToString() << "\n";
      return ExitCodeForStatus(s);
    }
  }
  return ExitCodeForStatus(status);
}

}  // namespace edgeworth_accountant
