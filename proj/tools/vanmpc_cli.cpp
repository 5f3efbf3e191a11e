// Copyright 2026 The vanmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// vanmpc: run closed-loop tracking experiments and check their properties.
//
//   vanmpc run [--config FILE] [--scenario NAME]... [--modes a,b] [--output-dir DIR]
//   vanmpc verify [--config FILE] [--sabotage]
//   vanmpc list-scenarios
//   vanmpc print-config [--config FILE]
//
// Exit status: 0 success, 1 configuration or I/O error, 2 a run diverged
// (run) or a property failed (verify).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vanmpc/config.hpp"
#include "vanmpc/io.hpp"
#include "vanmpc/runner.hpp"
#include "vanmpc/verify.hpp"

namespace fs = std::filesystem;
using namespace vanmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFailed = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> scenarios;
  std::vector<std::string> modes;
  std::string output_dir;
  long long seed = -1;
  int workers = 0;
  bool plot_data = false;
};

/// File values first, then VANMPC_OUTPUT_DIR, then command-line flags.
ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (const char* env = std::getenv("VANMPC_OUTPUT_DIR"); env != nullptr && *env != '\0')
    cfg.output_dir = env;
  if (!o.scenarios.empty()) cfg.scenarios = o.scenarios;
  if (!o.modes.empty()) cfg.modes = o.modes;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.seed >= 0) cfg.seed = static_cast<std::size_t>(o.seed);
  if (o.workers > 0) cfg.workers = o.workers;
  if (o.plot_data) cfg.emit_plot_data = true;
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("output directory '" + dir.string() + "' is not writable" +
                             (ec ? ": " + ec.message() : std::string()));
  return dir;
}

int cmd_run(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const fs::path root = prepare_dir(cfg.output_dir);
  const fs::path runs_dir = prepare_dir(root / "runs");
  // Probe writability before spending time on simulation.
  write_file(root / "config.json", dump_config(cfg));

  const SuiteResult suite = run_suite(cfg);
  for (std::size_t i = 0; i < suite.scenarios.size(); ++i) {
    for (const auto& [mode, rec] : suite.runs[i])
      write_file(runs_dir / (rec.scenario + "_" + to_string(mode) + ".csv"), run_log_csv(rec));
    if (cfg.emit_plot_data) {
      const fs::path plot_dir = prepare_dir(root / "plot");
      for (const auto& [kind, text] : plot_data_csv(suite.runs[i]))
        write_file(plot_dir / (suite.scenarios[i].name + "_" + kind + ".csv"), text);
    }
  }
  write_file(root / "summary.csv", summary_csv(cfg, suite.runs, suite.scenarios));

  std::cout << "wrote " << (root / "summary.csv").string() << '\n';
  for (const auto& runs : suite.runs)
    for (const auto& [mode, rec] : runs)
      if (rec.diverged)
        std::cerr << "diverged: " << rec.scenario << " " << to_string(mode) << " at t="
                  << rec.rows.back().time << '\n';
  return suite.any_diverged() ? kExitFailed : kExitOk;
}

int cmd_verify(const CommonOptions& o, bool sabotage) {
  CommonOptions v = o;
  v.scenarios.clear();
  v.modes.clear();
  ExperimentConfig cfg = resolve_config(v);
  cfg.scenarios.clear();
  cfg.modes.clear();
  if (sabotage) cfg.estimator.force_zero_estimate = true;
  const SuiteResult suite = run_suite(cfg);
  bool all = true;
  for (const auto& p : closed_loop_properties(suite, cfg.estimator.step)) {
    std::cout << (p.passed ? "PASS  " : "FAIL  ") << p.name << "  [" << p.detail << "]\n";
    all = all && p.passed;
  }
  std::cout << (all ? "all properties passed" : "some properties failed") << '\n';
  return all ? kExitOk : kExitFailed;
}

int cmd_list() {
  for (const auto& s : artificial_uncertainty_suite()) std::cout << s.name << '\n';
  return kExitOk;
}

int cmd_print_config(const CommonOptions& o) {
  std::cout << dump_config(resolve_config(o));
  return kExitOk;
}

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const std::size_t end = item.find(',', start);
      const std::string piece = item.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (!piece.empty()) out.push_back(piece);
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VAN-MPC adaptive trajectory tracking simulator"};
  app.require_subcommand(1);
  CommonOptions opt;
  bool list_flag = false;
  bool sabotage = false;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  };

  CLI::App* run = app.add_subcommand("run", "simulate scenarios and write CSV results");
  add_config(run);
  run->add_option("-s,--scenario", opt.scenarios, "scenario name (repeatable or comma separated)");
  run->add_option("-m,--modes", opt.modes, "planner modes: mpc,an_small,an_large,van");
  run->add_option("-o,--output-dir", opt.output_dir, "output directory (overrides VANMPC_OUTPUT_DIR)");
  run->add_option("--seed", opt.seed, "scenario noise seed")->check(CLI::NonNegativeNumber);
  run->add_option("-j,--workers", opt.workers, "parallel runs")->check(CLI::PositiveNumber);
  run->add_flag("--plot-data", opt.plot_data, "also write distance, path and relative-error CSVs");
  run->add_flag("--list-scenarios", list_flag, "print the built-in scenario names and exit");

  CLI::App* verify = app.add_subcommand("verify", "run the closed-loop property suite");
  add_config(verify);
  verify->add_option("-j,--workers", opt.workers, "parallel runs")->check(CLI::PositiveNumber);
  verify->add_option("--seed", opt.seed, "scenario noise seed")->check(CLI::NonNegativeNumber);
  verify->add_flag("--sabotage", sabotage, "force the van estimate to zero (the ordering checks should fail)");

  app.add_subcommand("list-scenarios", "print the built-in scenario names");

  CLI::App* print = app.add_subcommand("print-config", "print the effective configuration");
  add_config(print);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }
  opt.scenarios = split_commas(opt.scenarios);
  opt.modes = split_commas(opt.modes);

  try {
    if (app.got_subcommand("list-scenarios") || (run->parsed() && list_flag)) return cmd_list();
    if (run->parsed()) return cmd_run(opt);
    if (verify->parsed()) return cmd_verify(opt, sabotage);
    if (print->parsed()) return cmd_print_config(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
