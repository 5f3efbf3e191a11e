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

// CSV emission. Every file has one header row and a leading schema_version
// column; numbers use a fixed printf format so reruns are byte-identical.

#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanmpc/config.hpp"
#include "vanmpc/harness.hpp"

namespace vanmpc {

inline constexpr int kSchemaVersion = 1;

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : "none"; }

namespace detail {

inline void join_row(std::ostringstream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

}  // namespace detail

inline const std::vector<std::string>& run_log_columns() {
  static const std::vector<std::string> cols{
      "schema_version", "scenario",    "mode",        "step",         "time",
      "x",              "y",           "yaw",         "x_ref",        "y_ref",
      "yaw_ref",        "v_cmd",       "q_cmd",       "v_meas",       "q_meas",
      "dv_hat",         "dq_hat",      "dv_true",     "dq_true",      "gamma_v",
      "gamma_q",        "zeta_bar_v",  "zeta_bar_q",  "chi_d",        "chi_v",
      "chi_yaw",        "chi_q",       "e_e_x",       "e_e_y",        "e_e_yaw",
      "e_r_x",          "e_r_y",       "e_r_yaw",     "distance",     "region",
      "lyap_v",         "lyap_vdot",   "lyap_q",      "clf_value",    "clf_slack",
      "objective",      "iterations",  "kkt_residual", "max_gap",     "solver_status",
      "weight_norm"};
  return cols;
}

/// One row per planner step, columns as in run_log_columns().
inline std::string run_log_csv(const RunRecord& rec) {
  std::ostringstream os;
  detail::join_row(os, run_log_columns());
  for (const auto& r : rec.rows) {
    const auto& d = r.diag;
    detail::join_row(
        os, {std::to_string(kSchemaVersion), rec.scenario, to_string(rec.mode),
             std::to_string(r.step), fmt_num(r.time), fmt_num(r.actual.x_pos),
             fmt_num(r.actual.y_pos), fmt_num(r.actual.yaw), fmt_num(r.reference.x_pos),
             fmt_num(r.reference.y_pos), fmt_num(r.reference.yaw), fmt_num(r.command.velocity),
             fmt_num(r.command.roll_angle), fmt_num(r.measured_input.velocity),
             fmt_num(r.measured_input.roll_angle), fmt_num(d.du_hat(0)), fmt_num(d.du_hat(1)),
             fmt_num(r.du_true(0)), fmt_num(r.du_true(1)), fmt_num(d.gamma(0)),
             fmt_num(d.gamma(1)), fmt_num(d.zeta_bar(0)), fmt_num(d.zeta_bar(1)),
             fmt_num(d.chi(0)), fmt_num(d.chi(1)), fmt_num(d.chi(2)), fmt_num(d.chi(3)),
             fmt_num(d.errors.e_e(0)), fmt_num(d.errors.e_e(1)), fmt_num(d.errors.e_e(2)),
             fmt_num(d.errors.e_r(0)), fmt_num(d.errors.e_r(1)), fmt_num(d.errors.e_r(2)),
             fmt_num(r.distance), std::to_string(r.region), fmt_num(d.lyap_v),
             fmt_num(d.lyap_vdot), fmt_num(d.lyap_q), fmt_num(d.clf_value),
             fmt_num(d.clf_slack), fmt_num(d.objective), std::to_string(d.iterations),
             fmt_num(d.kkt_residual), fmt_num(d.max_gap), to_string(d.status),
             fmt_num(d.weight_norm)});
  }
  return os.str();
}

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{
      "schema_version", "scenario", "mode",  "rows",   "diverged", "nonconverged_solves",
      "t_r",            "d_m",      "d_mr",  "d_fp",   "e_rmsv",   "e_rmsq",
      "t_re",           "e_rmser"};
  return cols;
}

/// Flattens the config into "key.path=value" lines for the summary header.
inline std::vector<std::string> flatten_config(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  const auto flat = to_json(cfg).flatten();
  for (auto it = flat.begin(); it != flat.end(); ++it) {
    std::string key = it.key();
    for (auto& ch : key)
      if (ch == '/') ch = '.';
    if (!key.empty() && key.front() == '.') key.erase(0, 1);
    out.push_back(key + "=" + it.value().dump());
  }
  return out;
}

/// Metrics table, one row per (scenario, mode); `#` lines first list every hyperparameter.
inline std::string summary_csv(const ExperimentConfig& cfg,
                               const std::vector<std::map<PlannerMode, RunRecord>>& runs,
                               const std::vector<Scenario>& scenarios) {
  std::ostringstream os;
  for (const auto& line : flatten_config(cfg)) os << "# " << line << '\n';
  detail::join_row(os, summary_columns());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& [mode, rec] : runs[i]) {
      const MetricReport m = compute_metrics(rec, scenarios[i].true_profile_known);
      int bad = 0;
      for (const auto& r : rec.rows)
        if (r.diag.status != SolverStatus::converged) ++bad;
      detail::join_row(os, {std::to_string(kSchemaVersion), rec.scenario, to_string(mode),
                            std::to_string(rec.rows.size()), rec.diverged ? "1" : "0",
                            std::to_string(bad), fmt_opt(m.t_r), fmt_num(m.d_m), fmt_opt(m.d_mr),
                            fmt_num(m.d_fp), fmt_opt(m.e_rmsv), fmt_opt(m.e_rmsq),
                            fmt_opt(m.t_re), fmt_opt(m.e_rmser)});
    }
  }
  return os.str();
}

/// Plot data for one scenario: name suffix -> CSV text.
///   distance: time series of the distance to the reference
///   path:     actual and reference XY
///   relerr:   relative error of the velocity-channel estimate (adaptive modes)
inline std::map<std::string, std::string> plot_data_csv(
    const std::map<PlannerMode, RunRecord>& runs) {
  std::ostringstream dist, path, rel;
  detail::join_row(dist, {"schema_version", "mode", "time", "distance"});
  detail::join_row(path, {"schema_version", "mode", "time", "x", "y", "x_ref", "y_ref"});
  detail::join_row(rel, {"schema_version", "mode", "time", "rel_err_v"});
  const std::string sv = std::to_string(kSchemaVersion);
  for (const auto& [mode, rec] : runs) {
    const std::string m = to_string(mode);
    for (const auto& r : rec.rows) {
      detail::join_row(dist, {sv, m, fmt_num(r.time), fmt_num(r.distance)});
      detail::join_row(path, {sv, m, fmt_num(r.time), fmt_num(r.actual.x_pos),
                              fmt_num(r.actual.y_pos), fmt_num(r.reference.x_pos),
                              fmt_num(r.reference.y_pos)});
    }
    if (!rec.estimator_used) continue;
    const auto s = rec.series();
    const auto e = relative_errors(s);
    for (std::size_t i = 0; i < e.size(); ++i)
      detail::join_row(rel, {sv, m, fmt_num(s.time[i]), fmt_num(e[i])});
  }
  return {{"distance", dist.str()}, {"path", path.str()}, {"relerr", rel.str()}};
}

}  // namespace vanmpc
