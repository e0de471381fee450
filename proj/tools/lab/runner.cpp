// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>

#include "hallab/error.hpp"
#include "hallab/metrics.hpp"

namespace lab {

namespace fs = std::filesystem;

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::kCsv;
  if (s == "csv+svg") return Format::kCsvSvg;
  throw ConfigError("unknown format '" + std::string(s) + "' (expected csv or csv+svg)");
}

namespace {

bool valid_name(const std::string& s) {
  if (s.empty() || s.size() > 64) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.';
  }) && s != "." && s != "..";
}

}  // namespace

Scenario parse_scenario(std::string_view text, const fs::path& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  Params top(doc, "scenario");
  Scenario scn;
  scn.source = source;
  if (top.str("schema", "") != kSchema) {
    throw ConfigError("schema must be \"" + std::string(kSchema) + "\"");
  }
  scn.name = top.str("name", "");
  if (!valid_name(scn.name)) throw ConfigError("name must match [A-Za-z0-9._-]{1,64}");
  scn.demo = top.str("demo", "");
  if (!demo_registry().contains(scn.demo)) throw ConfigError("unknown demo '" + scn.demo + "'");
  scn.seed = top.u64("seed", 1);
  scn.params = top.raw_or("params", json::object());
  if (!scn.params.is_object()) throw ConfigError("params must be an object");
  top.finish();
  return scn;
}

Scenario load_scenario(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), file);
  } catch (const ConfigError& e) {
    throw ConfigError(file.filename().string() + ": " + e.what());
  }
}

// ---- Params ----------------------------------------------------------------

Params::Params(const json& object, std::string where) : object_(object), where_(std::move(where)) {
  if (!object_.is_object()) throw ConfigError(where_ + " must be an object");
}

bool Params::has(std::string_view key) const { return object_.contains(key); }

const json* Params::find(std::string_view key) {
  auto it = object_.find(key);
  if (it == object_.end()) return nullptr;
  used_.insert(std::string(key));
  return &*it;
}

void Params::reject(std::string_view key, const std::string& why) const {
  throw ConfigError(where_ + "." + std::string(key) + ": " + why);
}

std::uint64_t Params::u64(std::string_view key, std::uint64_t fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_number_unsigned()) reject(key, "expected a non-negative integer");
  return v->get<std::uint64_t>();
}

std::uint32_t Params::u32(std::string_view key, std::uint32_t fallback) {
  const auto v = u64(key, fallback);
  if (v > std::numeric_limits<std::uint32_t>::max()) reject(key, "value too large");
  return static_cast<std::uint32_t>(v);
}

int Params::i32(std::string_view key, int fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_number_integer()) reject(key, "expected an integer");
  const auto x = v->get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    reject(key, "value out of range");
  }
  return static_cast<int>(x);
}

double Params::real(std::string_view key, double fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_number()) reject(key, "expected a number");
  return v->get<double>();
}

bool Params::boolean(std::string_view key, bool fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_boolean()) reject(key, "expected true or false");
  return v->get<bool>();
}

std::string Params::str(std::string_view key, std::string fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_string()) reject(key, "expected a string");
  return v->get<std::string>();
}

std::optional<std::uint64_t> Params::optional_u64(std::string_view key) {
  const json* v = find(key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_number_unsigned()) reject(key, "expected a non-negative integer or null");
  return v->get<std::uint64_t>();
}

std::vector<std::uint64_t> Params::u64_list(std::string_view key,
                                            std::vector<std::uint64_t> fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_array()) reject(key, "expected an array");
  std::vector<std::uint64_t> out;
  for (const auto& e : *v) {
    if (!e.is_number_unsigned()) reject(key, "expected non-negative integers");
    out.push_back(e.get<std::uint64_t>());
  }
  return out;
}

std::vector<double> Params::real_list(std::string_view key, std::vector<double> fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_array()) reject(key, "expected an array");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) reject(key, "expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::set<std::string> Params::str_set(std::string_view key) {
  const json* v = find(key);
  std::set<std::string> out;
  if (!v) return out;
  if (!v->is_array()) reject(key, "expected an array of strings");
  for (const auto& e : *v) {
    if (!e.is_string()) reject(key, "expected an array of strings");
    out.insert(e.get<std::string>());
  }
  return out;
}

const json& Params::raw(std::string_view key) const {
  auto it = object_.find(key);
  if (it == object_.end()) reject(key, "is required");
  used_.insert(std::string(key));
  return *it;
}

json Params::raw_or(std::string_view key, json fallback) {
  const json* v = find(key);
  return v ? *v : std::move(fallback);
}

void Params::finish() const {
  for (const auto& [key, value] : object_.items()) {
    if (!used_.contains(key)) reject(key, "unknown key");
  }
}

// ---- results ---------------------------------------------------------------

void DemoResult::check(std::string name, bool passed, std::string detail) {
  checks.push_back({std::move(name), passed, std::move(detail)});
}

void DemoResult::file(std::string filename, std::string content) {
  artifacts.push_back({std::move(filename), std::move(content), false});
}

void DemoResult::figure(std::string filename, std::string content) {
  artifacts.push_back({std::move(filename), std::move(content), true});
}

bool DemoResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

PreparedDemo prepare(const Scenario& scn, std::uint64_t seed) {
  const auto& reg = demo_registry();
  auto it = reg.find(scn.demo);
  if (it == reg.end()) throw ConfigError("unknown demo '" + scn.demo + "'");
  Params params(scn.params, "params");
  try {
    auto demo = it->second(params, seed);
    params.finish();
    return demo;
  } catch (const hallab::Error& e) {
    // Typed configs reject out-of-range values through the library.
    throw ConfigError("params: " + std::string(e.what()));
  }
}

ScenarioOutcome execute(const Scenario& scn, const RunOptions& opts) {
  ScenarioOutcome out;
  out.name = scn.name;
  out.demo = scn.demo;
  out.file = scn.source.filename().string();
  PreparedDemo demo;
  try {
    demo = prepare(scn, opts.seed.value_or(scn.seed));
  } catch (const ConfigError& e) {
    out.config_error = e.what();
    out.code = ExitCode::kConfigError;
    return out;
  }
  try {
    out.result = demo();
    out.result.check("demo-completed", true);
  } catch (const std::exception& e) {
    out.result.check("demo-completed", false, e.what());
  }
  out.code = out.result.passed() ? ExitCode::kOk : ExitCode::kInvariantViolation;
  return out;
}

namespace {

void write_checks_csv(std::ostream& os, const std::vector<Check>& checks) {
  os << "check,status,detail\n";
  for (const auto& c : checks) {
    os << hallab::csv_field(c.name) << ',' << (c.passed ? "PASS" : "FAIL") << ','
       << hallab::csv_field(c.detail) << '\n';
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << content;
  if (!f) throw ConfigError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("output directory " + dir.string() + " is not writable");
  }
}

}  // namespace

void write_outputs(const ScenarioOutcome& outcome, const RunOptions& opts) {
  const fs::path dir = opts.out / outcome.name;
  ensure_dir(dir);
  for (const auto& a : outcome.result.artifacts) {
    if (a.figure && opts.format == Format::kCsv) continue;
    write_file(dir / a.filename, a.content);
  }
  std::ostringstream checks;
  write_checks_csv(checks, outcome.result.checks);
  write_file(dir / "checks.csv", checks.str());
}

namespace {

void log_outcome(std::ostream& log, const ScenarioOutcome& o) {
  if (o.config_error) {
    log << "ERROR " << (o.name.empty() ? o.file : o.name) << ": " << *o.config_error << '\n';
    return;
  }
  for (const auto& c : o.result.checks) {
    log << (c.passed ? "PASS " : "FAIL ") << o.name << ' ' << c.name;
    if (!c.detail.empty()) log << " (" << c.detail << ')';
    log << '\n';
  }
}

}  // namespace

int run_file(const fs::path& file, const RunOptions& opts, std::ostream& log) {
  ScenarioOutcome outcome;
  try {
    outcome = execute(load_scenario(file), opts);
    if (outcome.config_error) {
      log << "error: " << *outcome.config_error << '\n';
      return static_cast<int>(ExitCode::kConfigError);
    }
    write_outputs(outcome, opts);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfigError);
  }
  log_outcome(log, outcome);
  return static_cast<int>(outcome.code);
}

void write_acceptance_report(std::ostream& os, const std::vector<ScenarioOutcome>& outcomes) {
  os << "scenario,demo,check,status,detail\n";
  for (const auto& o : outcomes) {
    if (o.config_error) {
      os << hallab::csv_field(o.file) << ",,config,ERROR," << hallab::csv_field(*o.config_error)
         << '\n';
      continue;
    }
    for (const auto& c : o.result.checks) {
      os << hallab::csv_field(o.name) << ',' << hallab::csv_field(o.demo) << ','
         << hallab::csv_field(c.name) << ',' << (c.passed ? "PASS" : "FAIL") << ','
         << hallab::csv_field(c.detail) << '\n';
    }
  }
}

int run_all(const fs::path& dir, const RunOptions& opts, std::ostream& log) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    log << "error: " << dir.string() << " is not a directory\n";
    return static_cast<int>(ExitCode::kConfigError);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<std::future<ScenarioOutcome>> jobs;
  jobs.reserve(files.size());
  for (const auto& f : files) {
    jobs.push_back(std::async(std::launch::async, [f, &opts] {
      try {
        return execute(load_scenario(f), opts);
      } catch (const ConfigError& e) {
        ScenarioOutcome o;
        o.file = f.filename().string();
        o.config_error = e.what();
        o.code = ExitCode::kConfigError;
        return o;
      }
    }));
  }
  std::vector<ScenarioOutcome> outcomes;
  for (auto& j : jobs) outcomes.push_back(j.get());

  // Two configs claiming the same output directory would clobber each other.
  std::set<std::string> names;
  for (auto& o : outcomes) {
    if (o.config_error) continue;
    if (!names.insert(o.name).second) {
      o.config_error = "duplicate scenario name '" + o.name + "'";
      o.code = ExitCode::kConfigError;
    }
  }

  bool any_config = false, any_fail = false;
  for (auto& o : outcomes) {
    if (!o.config_error) {
      try {
        write_outputs(o, opts);
      } catch (const ConfigError& e) {
        o.config_error = e.what();
        o.code = ExitCode::kConfigError;
      }
    }
    any_config |= o.code == ExitCode::kConfigError;
    any_fail |= o.code == ExitCode::kInvariantViolation;
    log_outcome(log, o);
  }
  try {
    ensure_dir(opts.out);
    std::ostringstream report;
    write_acceptance_report(report, outcomes);
    write_file(opts.out / "acceptance_report.csv", report.str());
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfigError);
  }
  if (any_config) return static_cast<int>(ExitCode::kConfigError);
  if (any_fail) return static_cast<int>(ExitCode::kInvariantViolation);
  return static_cast<int>(ExitCode::kOk);
}

int validate_file(const fs::path& file, std::ostream& log) {
  try {
    const auto scn = load_scenario(file);
    prepare(scn, scn.seed);
    log << "ok " << scn.name << " (" << scn.demo << ")\n";
    return static_cast<int>(ExitCode::kOk);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfigError);
  }
}

}  // namespace lab
