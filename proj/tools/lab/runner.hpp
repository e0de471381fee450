// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// Scenario loading, demo dispatch and artifact writing for the `lab` tool.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lab {

using nlohmann::json;

inline constexpr std::string_view kSchema = "hallab.scenario/1";

enum class ExitCode : int { kOk = 0, kConfigError = 1, kInvariantViolation = 2 };

/// Bad scenario file, bad parameters, or an unusable output directory.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { kCsv, kCsvSvg };
Format parse_format(std::string_view s);

struct Scenario {
  std::string name;
  std::string demo;
  std::uint64_t seed = 1;
  json params = json::object();
  std::filesystem::path source;
};

/// Reads and checks the envelope (schema, name, demo, seed, params).
Scenario parse_scenario(std::string_view text, const std::filesystem::path& source = {});
Scenario load_scenario(const std::filesystem::path& file);

/// Typed access to a params object; every key must be consumed.
class Params {
 public:
  Params(const json& object, std::string where);

  bool has(std::string_view key) const;
  std::uint64_t u64(std::string_view key, std::uint64_t fallback);
  std::uint32_t u32(std::string_view key, std::uint32_t fallback);
  int i32(std::string_view key, int fallback);
  double real(std::string_view key, double fallback);
  bool boolean(std::string_view key, bool fallback);
  std::string str(std::string_view key, std::string fallback);
  std::optional<std::uint64_t> optional_u64(std::string_view key);
  std::vector<std::uint64_t> u64_list(std::string_view key, std::vector<std::uint64_t> fallback);
  std::vector<double> real_list(std::string_view key, std::vector<double> fallback);
  std::set<std::string> str_set(std::string_view key);
  /// Raw sub-value (object or array), consumed.
  const json& raw(std::string_view key) const;
  json raw_or(std::string_view key, json fallback);

  /// ConfigError naming any key that was never read.
  void finish() const;
  [[noreturn]] void reject(std::string_view key, const std::string& why) const;
  const std::string& where() const { return where_; }

 private:
  const json* find(std::string_view key);

  const json& object_;
  std::string where_;
  mutable std::set<std::string, std::less<>> used_;
};

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

struct Artifact {
  std::string filename;
  std::string content;
  bool figure = false;  // skipped under --format csv
};

struct DemoResult {
  std::vector<Check> checks;
  std::vector<Artifact> artifacts;

  void check(std::string name, bool passed, std::string detail = {});
  void file(std::string filename, std::string content);
  void figure(std::string filename, std::string content);
  bool passed() const;
};

/// Parsing a demo's params yields a runnable closure; parse errors throw
/// ConfigError before any computation starts.
using PreparedDemo = std::function<DemoResult()>;
using DemoFactory = std::function<PreparedDemo(Params& params, std::uint64_t seed)>;

const std::map<std::string, DemoFactory, std::less<>>& demo_registry();
PreparedDemo prepare(const Scenario& scn, std::uint64_t seed);

struct RunOptions {
  std::filesystem::path out = "lab-out";
  std::optional<std::uint64_t> seed;
  Format format = Format::kCsvSvg;
};

struct ScenarioOutcome {
  std::string name;
  std::string demo;
  std::string file;
  std::optional<std::string> config_error;
  DemoResult result;
  ExitCode code = ExitCode::kOk;
};

/// Runs one scenario in memory. Library failures during the demo become a
/// failed "demo-completed" check.
ScenarioOutcome execute(const Scenario& scn, const RunOptions& opts);
/// Writes <out>/<name>/ with every artifact plus checks.csv.
void write_outputs(const ScenarioOutcome& outcome, const RunOptions& opts);

int run_file(const std::filesystem::path& file, const RunOptions& opts, std::ostream& log);
int run_all(const std::filesystem::path& dir, const RunOptions& opts, std::ostream& log);
int validate_file(const std::filesystem::path& file, std::ostream& log);

/// Acceptance report rows: scenario,demo,check,status,detail.
void write_acceptance_report(std::ostream& os, const std::vector<ScenarioOutcome>& outcomes);

}  // namespace lab
