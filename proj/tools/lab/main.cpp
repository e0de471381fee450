// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lab: hallucination-boundary simulation runner"};
  app.require_subcommand(1);

  std::string out = "lab-out";
  std::uint64_t seed = 0;
  std::string format = "csv+svg";
  app.add_option("--out", out, "Output directory")->envname("LAB_OUT");
  auto* seed_opt =
      app.add_option("--seed", seed, "Override every scenario's seed")->envname("LAB_SEED");
  auto* format_opt = app.add_option("--format", format, "Artifact format")
      ->envname("LAB_FORMAT")
      ->check(CLI::IsMember({"csv", "csv+svg"}));

  std::string target;
  auto* run = app.add_subcommand("run", "Run one scenario file");
  run->add_option("file", target, "Scenario .cfg file")->required();
  run->fallthrough();
  auto* run_all = app.add_subcommand("run-all", "Run every .cfg in a directory");
  run_all->add_option("dir", target, "Scenario directory")->required();
  run_all->fallthrough();
  auto* validate = app.add_subcommand("validate", "Check a scenario file without running it");
  validate->add_option("file", target, "Scenario .cfg file")->required();
  validate->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  // CLI11 drops an environment value that fails its check instead of
  // reporting it, so LAB_FORMAT is re-checked here.
  const char* env_format = std::getenv("LAB_FORMAT");
  if (format_opt->count() == 0 && env_format != nullptr) format = env_format;

  lab::RunOptions opts;
  opts.out = out;
  if (seed_opt->count() > 0) opts.seed = seed;
  try {
    opts.format = lab::parse_format(format);
  } catch (const lab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(lab::ExitCode::kConfigError);
  }

  if (run->parsed()) return lab::run_file(target, opts, std::cout);
  if (run_all->parsed()) return lab::run_all(target, opts, std::cout);
  return lab::validate_file(target, std::cout);
}
