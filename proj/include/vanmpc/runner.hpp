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

#pragma once

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "vanmpc/config.hpp"
#include "vanmpc/harness.hpp"

namespace vanmpc {

struct SuiteResult {
  std::vector<Scenario> scenarios;
  std::vector<std::map<PlannerMode, RunRecord>> runs;  // parallel to scenarios

  const std::map<PlannerMode, RunRecord>& at(const std::string& name) const {
    for (std::size_t i = 0; i < scenarios.size(); ++i)
      if (scenarios[i].name == name) return runs[i];
    throw std::invalid_argument("scenario '" + name + "' was not run");
  }
  bool any_diverged() const {
    for (const auto& r : runs)
      for (const auto& [m, rec] : r)
        if (rec.diverged) return true;
    return false;
  }
};

/// Runs every (scenario, mode) pair of the config on up to `cfg.workers`
/// threads. Each run is independent, so results do not depend on scheduling.
inline SuiteResult run_suite(const ExperimentConfig& cfg) {
  cfg.validate();
  SuiteResult out;
  out.scenarios = cfg.selected_scenarios();
  out.runs.resize(out.scenarios.size());

  struct Job {
    std::size_t scenario;
    PlannerMode mode;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < out.scenarios.size(); ++i)
    for (PlannerMode m : out.scenarios[i].modes) jobs.push_back({i, m});

  std::vector<RunRecord> records(jobs.size());
  const OcpConfig ocp = cfg.effective_planner();
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        records[j] = run_mode(out.scenarios[jobs[j].scenario], jobs[j].mode, cfg.plant, ocp,
                              cfg.estimator, cfg.harness);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), jobs.size());
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t j = 0; j < jobs.size(); ++j)
    out.runs[jobs[j].scenario].emplace(jobs[j].mode, std::move(records[j]));
  return out;
}

}  // namespace vanmpc
