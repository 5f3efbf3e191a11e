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

// Closed-loop properties checked over finished runs: tracking without
// uncertainty, ordering between planners, estimate convergence, step-size
// bounds and the Lyapunov audit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "vanmpc/harness.hpp"
#include "vanmpc/runner.hpp"

namespace vanmpc {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

using ModeRuns = std::map<PlannerMode, RunRecord>;

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string opt_str(const std::optional<double>& v) {
  return v ? fmt("%.3f", *v) : std::string("none");
}

inline const RunRecord& get(const ModeRuns& runs, PlannerMode m) {
  const auto it = runs.find(m);
  if (it == runs.end()) throw std::invalid_argument(std::string("missing mode ") + to_string(m));
  return it->second;
}

}  // namespace detail

/// Slack below this counts as zero for the Lyapunov audit.
inline constexpr double kZeroSlack = 1e-8;
inline constexpr double kLyapunovMargin = 1e-6;

/// Largest distance on or after the first change of terrain region; none if the region never changes.
inline std::optional<double> peak_after_switch(const RunRecord& rec) {
  for (std::size_t i = 1; i < rec.rows.size(); ++i) {
    if (rec.rows[i].region == rec.rows[i - 1].region) continue;
    double peak = 0.0;
    for (std::size_t k = i; k < rec.rows.size(); ++k) peak = std::max(peak, rec.rows[k].distance);
    return peak;
  }
  return std::nullopt;
}

struct LyapunovAudit {
  std::size_t eligible = 0;  // steps with an active CLF and zero slack
  std::size_t satisfied = 0;
  double fraction() const {
    return eligible == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(eligible);
  }
};

inline LyapunovAudit lyapunov_audit(const RunRecord& rec) {
  LyapunovAudit a;
  for (const auto& r : rec.rows) {
    if (!r.diag.clf_active || r.diag.clf_slack > kZeroSlack) continue;
    ++a.eligible;
    if (r.diag.lyap_vdot <= -r.diag.lyap_q + kLyapunovMargin) ++a.satisfied;
  }
  return a;
}

/// Without uncertainty every planner reaches the reference and holds d_mr < 0.1 m.
inline PropertyResult check_nominal_tracking(const ModeRuns& runs) {
  PropertyResult p{"nominal tracking: every mode reaches 0.2 m and holds d_mr < 0.1 m", true, ""};
  for (const auto& [mode, rec] : runs) {
    const auto m = compute_metrics(rec, true);
    const bool ok = !rec.diverged && m.t_r && m.d_mr && *m.d_mr < 0.1;
    p.passed = p.passed && ok;
    p.detail += std::string(to_string(mode)) + " t_r=" + detail::opt_str(m.t_r) +
                " d_mr=" + detail::opt_str(m.d_mr) + "; ";
  }
  return p;
}

/// Plain MPC has the largest mean distance of the planners in `runs`.
inline PropertyResult check_mpc_worst(const ModeRuns& runs, const std::string& label) {
  PropertyResult p{label + ": plain MPC has the largest mean distance", true, ""};
  const double d_mpc = compute_metrics(detail::get(runs, PlannerMode::mpc), true).d_m;
  for (const auto& [mode, rec] : runs) {
    const double d = compute_metrics(rec, true).d_m;
    p.detail += std::string(to_string(mode)) + " d_m=" + detail::fmt("%.4f", d) + "; ";
    if (mode != PlannerMode::mpc && !(d < d_mpc)) p.passed = false;
  }
  return p;
}

/// VAN's relative error crosses zero before both fixed-step planners'.
inline PropertyResult check_first_crossing(const ModeRuns& runs) {
  PropertyResult p{"first zero crossing of the relative error: van before an_small and an_large",
                   false, ""};
  const auto van = compute_metrics(detail::get(runs, PlannerMode::van), true);
  const auto small = compute_metrics(detail::get(runs, PlannerMode::an_small), true);
  const auto large = compute_metrics(detail::get(runs, PlannerMode::an_large), true);
  p.detail = "t_re van=" + detail::opt_str(van.t_re) + " an_small=" + detail::opt_str(small.t_re) +
             " an_large=" + detail::opt_str(large.t_re);
  auto later = [&](const std::optional<double>& other) { return !other || *van.t_re < *other; };
  p.passed = van.t_re.has_value() && later(small.t_re) && later(large.t_re);
  return p;
}

/// VAN's post-crossing relative-error RMSE is the smallest of the adaptive planners.
inline PropertyResult check_relative_error_rmse(const ModeRuns& runs) {
  PropertyResult p{"relative-error RMSE after the first crossing: van smallest of the adaptive modes",
                   false, ""};
  const auto van = compute_metrics(detail::get(runs, PlannerMode::van), true);
  const auto small = compute_metrics(detail::get(runs, PlannerMode::an_small), true);
  const auto large = compute_metrics(detail::get(runs, PlannerMode::an_large), true);
  p.detail = "e_rmser van=" + detail::opt_str(van.e_rmser) +
             " an_small=" + detail::opt_str(small.e_rmser) +
             " an_large=" + detail::opt_str(large.e_rmser);
  auto beats = [&](const std::optional<double>& other) { return !other || *van.e_rmser < *other; };
  p.passed = van.e_rmser.has_value() && beats(small.e_rmser) && beats(large.e_rmser);
  return p;
}

/// VAN's |dv_hat/dv - 1| drops below 0.1 and stays below 0.25 over the final third of the run.
inline PropertyResult check_estimate_convergence(const ModeRuns& runs) {
  PropertyResult p{"van relative error falls below 0.1 and stays below 0.25 in the final third",
                   false, ""};
  const RunRecord& rec = detail::get(runs, PlannerMode::van);
  const auto rel = relative_errors(rec.series());
  const std::size_t n = rel.size();
  bool reached = false;
  double worst_tail = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(rel[i])) continue;
    if (std::abs(rel[i]) < 0.1) reached = true;
    if (3 * i >= 2 * n) worst_tail = std::max(worst_tail, std::abs(rel[i]));
  }
  p.passed = reached && worst_tail < 0.25;
  p.detail = std::string("reached 0.1: ") + (reached ? "yes" : "no") +
             ", max in final third=" + detail::fmt("%.4f", worst_tail);
  return p;
}

/// Plain MPC never gets within 0.2 m; every adaptive planner does.
inline PropertyResult check_large_uncertainty_rise(const ModeRuns& runs) {
  PropertyResult p{"large uncertainty: mpc t_r none, adaptive modes finite t_r", true, ""};
  for (const auto& [mode, rec] : runs) {
    const auto m = compute_metrics(rec, true);
    p.detail += std::string(to_string(mode)) + " t_r=" + detail::opt_str(m.t_r) + "; ";
    const bool ok = mode == PlannerMode::mpc ? !m.t_r.has_value() : m.t_r.has_value();
    p.passed = p.passed && ok;
  }
  return p;
}

/// Gamma stays inside [b, c] on every logged VAN step.
inline PropertyResult check_step_size_envelope(const SuiteResult& suite, const StepSizeParams& sp) {
  PropertyResult p{"step-size envelope: van Gamma inside its bounds on every step", true, ""};
  std::size_t steps = 0;
  double lo_v = INFINITY, hi_v = -INFINITY, lo_q = INFINITY, hi_q = -INFINITY;
  for (const auto& runs : suite.runs) {
    const auto it = runs.find(PlannerMode::van);
    if (it == runs.end()) continue;
    for (const auto& r : it->second.rows) {
      const Vec2 g = r.diag.gamma;
      ++steps;
      lo_v = std::min(lo_v, g(0));
      hi_v = std::max(hi_v, g(0));
      lo_q = std::min(lo_q, g(1));
      hi_q = std::max(hi_q, g(1));
      if (g(0) < sp.b_v || g(0) > sp.c_v || g(1) < sp.b_q || g(1) > sp.c_q) p.passed = false;
    }
  }
  if (steps == 0) p.passed = false;
  p.detail = std::to_string(steps) + " steps, Gamma_1 in [" + detail::fmt("%.4f", lo_v) + ", " +
             detail::fmt("%.4f", hi_v) + "], Gamma_2 in [" + detail::fmt("%.4f", lo_q) + ", " +
             detail::fmt("%.4f", hi_q) + "]";
  return p;
}

/// Per scenario, >= 95% of zero-slack CLF steps satisfy V' <= -Q + 1e-6.
inline PropertyResult check_lyapunov_audit(const SuiteResult& suite) {
  PropertyResult p{"Lyapunov audit: V' <= -Q on >= 95% of zero-slack steps per scenario", true, ""};
  for (std::size_t i = 0; i < suite.runs.size(); ++i) {
    LyapunovAudit total;
    for (const auto& [mode, rec] : suite.runs[i]) {
      const auto a = lyapunov_audit(rec);
      total.eligible += a.eligible;
      total.satisfied += a.satisfied;
    }
    p.passed = p.passed && total.fraction() >= 0.95;
    p.detail += suite.scenarios[i].name + " " + std::to_string(total.satisfied) + "/" +
                std::to_string(total.eligible) + "; ";
  }
  return p;
}

/// VAN has the smallest mean distance of all planners.
inline PropertyResult check_van_best_mean(const ModeRuns& runs, const std::string& label) {
  PropertyResult p{label + ": van has the smallest mean distance", true, ""};
  const double d_van = compute_metrics(detail::get(runs, PlannerMode::van), true).d_m;
  for (const auto& [mode, rec] : runs) {
    const double d = compute_metrics(rec, true).d_m;
    p.detail += std::string(to_string(mode)) + " d_m=" + detail::fmt("%.4f", d) + "; ";
    if (mode != PlannerMode::van && !(d_van < d)) p.passed = false;
  }
  return p;
}

/// VAN's distance peak after the first terrain switch is below plain MPC's.
inline PropertyResult check_switch_peak(const ModeRuns& runs, const std::string& label) {
  PropertyResult p{label + ": van distance peak after the terrain switch below mpc's", false, ""};
  const auto van = peak_after_switch(detail::get(runs, PlannerMode::van));
  const auto mpc = peak_after_switch(detail::get(runs, PlannerMode::mpc));
  p.detail = "peak van=" + detail::opt_str(van) + " mpc=" + detail::opt_str(mpc);
  p.passed = van && mpc && *van < *mpc;
  return p;
}

/// Property suite used by `vanmpc verify`; needs flat_xi00, flat_xi02, flat_xi04 and varied.
inline std::vector<PropertyResult> closed_loop_properties(const SuiteResult& suite,
                                                          const StepSizeParams& sp) {
  std::vector<PropertyResult> out;
  out.push_back(check_nominal_tracking(suite.at("flat_xi00")));
  out.push_back(check_mpc_worst(suite.at("flat_xi02"), "flat_xi02"));
  out.push_back(check_first_crossing(suite.at("flat_xi02")));
  out.push_back(check_relative_error_rmse(suite.at("flat_xi02")));
  out.push_back(check_estimate_convergence(suite.at("flat_xi02")));
  out.push_back(check_mpc_worst(suite.at("flat_xi04"), "flat_xi04"));
  out.push_back(check_large_uncertainty_rise(suite.at("flat_xi04")));
  out.push_back(check_step_size_envelope(suite, sp));
  out.push_back(check_lyapunov_audit(suite));
  out.push_back(check_van_best_mean(suite.at("varied"), "varied"));
  out.push_back(check_switch_peak(suite.at("varied"), "varied"));
  return out;
}

}  // namespace vanmpc
