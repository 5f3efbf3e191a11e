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

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanmpc/estimator.hpp"
#include "vanmpc/ocp.hpp"
#include "vanmpc/trajectories.hpp"

namespace vanmpc {

/// The four instruction planners under comparison.
enum class PlannerMode { mpc, an_small, an_large, van };

inline const char* to_string(PlannerMode m) {
  switch (m) {
    case PlannerMode::mpc: return "mpc";
    case PlannerMode::an_small: return "an_small";
    case PlannerMode::an_large: return "an_large";
    case PlannerMode::van: return "van";
  }
  return "unknown";
}

inline PlannerMode parse_mode(const std::string& s) {
  if (s == "mpc") return PlannerMode::mpc;
  if (s == "an_small") return PlannerMode::an_small;
  if (s == "an_large") return PlannerMode::an_large;
  if (s == "van") return PlannerMode::van;
  throw std::invalid_argument("unknown planner mode '" + s + "'");
}

inline const std::vector<PlannerMode>& all_modes() {
  static const std::vector<PlannerMode> modes{PlannerMode::mpc, PlannerMode::an_small,
                                              PlannerMode::an_large, PlannerMode::van};
  return modes;
}

struct EstimatorConfig {
  RbfBasisConfig basis;
  double gamma_mix = 0.8;  // weight of the prediction error in E_c
  std::size_t buffer_capacity = 10;
  StepSizeParams step;
  Vec2 gamma_small{0.5, 0.1};
  Vec2 gamma_large{1.0, 0.1};
  double weight_cap = 50.0;
  double norm_floor = 1e-3;
  std::size_t norm_window = 0;  // 0: running max over the whole run
  bool force_zero_estimate = false;  // van mode only: sabotage switch for verification runs

  void validate() const {
    basis.validate();
    step.validate();
    if (!(gamma_mix > 0.5 && gamma_mix < 1.0))
      throw std::invalid_argument("estimator.gamma_mix must be in (0.5, 1)");
    if (buffer_capacity < 1) throw std::invalid_argument("estimator.buffer_capacity must be >= 1");
    if (!(gamma_small.array() > 0.0).all() || !(gamma_large.array() > 0.0).all())
      throw std::invalid_argument("estimator fixed step sizes must be > 0");
    if (!(weight_cap > 0.0)) throw std::invalid_argument("estimator.weight_cap must be > 0");
    if (!(norm_floor > 0.0)) throw std::invalid_argument("estimator.norm_floor must be > 0");
  }
};

/// Per-call record of what the planner computed.
struct PlanDiagnostics {
  SolverStatus status = SolverStatus::converged;
  int iterations = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double max_gap = 0.0;
  bool clf_active = false;
  double clf_value = 0.0;
  double clf_slack = 0.0;
  Vec2 gamma = Vec2::Zero();
  Vec2 zeta_bar = Vec2::Zero();
  Vec2 du_hat = Vec2::Zero();
  double weight_norm = 0.0;
  ErrorTriple errors;
  double lyap_v = 0.0;
  double lyap_vdot = 0.0;
  double lyap_q = 0.0;
  Vec4 raw_input = Vec4::Zero();  // deltas before normalization
  Vec4 chi = Vec4::Zero();
  RobotState predicted_next;
};

struct PlanOutput {
  CommandInput command;
  PlanDiagnostics diag;
};

/// One instruction planner with its estimator state; owned by a single loop.
class InstructionPlanner {
 public:
  InstructionPlanner(PlannerMode mode, OcpConfig ocp, EstimatorConfig est)
      : mode_(mode), ocp_(std::move(ocp)), est_(std::move(est)) {
    ocp_.validate();
    est_.validate();
    if (mode_ == PlannerMode::mpc) ocp_.clf_enabled = false;
    reset();
  }

  void reset() {
    weights_ = NetworkWeights::zeros(est_.basis.centers());
    normalizer_ = InputNormalizer{Vec4::Zero(), est_.norm_floor, est_.norm_window, {}};
    step_ = StepSizeState::initial(est_.step, est_.buffer_capacity);
    prev_.reset();
    prev_solution_.reset();
  }

  PlannerMode mode() const { return mode_; }
  const OcpConfig& ocp_config() const { return ocp_; }
  const NetworkWeights& weights() const { return weights_; }
  const StepSizeState& step_state() const { return step_; }

  Vec2 current_gamma() const {
    switch (mode_) {
      case PlannerMode::an_small: return est_.gamma_small;
      case PlannerMode::an_large: return est_.gamma_large;
      case PlannerMode::van: return step_.gamma;
      case PlannerMode::mpc: break;
    }
    return Vec2::Zero();
  }

  /// One loop iteration: errors, network input, step size (van), weight
  /// update, estimate, OCP solve. `window` holds N+1 reference samples
  /// starting at the current time.
  PlanOutput plan(const RobotState& pose, const CommandInput& measured_input,
                  const std::vector<ReferenceSample>& window) {
    const double dt = ocp_.dt;
    const Vec3 x = pose.vec();
    const Vec2 u = measured_input.vec();
    PlanDiagnostics d;

    OcpProblem prob;
    prob.x0 = x;
    prob.u0 = u;
    prob.set_reference(window);

    if (prev_) {
      d.errors = tracking_errors(pose, window.front(), prev_->predicted, est_.gamma_mix);
      prob.xdot_prev_pred = compensated_derivative(prev_->predicted.vec(),
                                                   prev_->next_command.vec(), prev_->estimate,
                                                   ocp_.wheel_radius);
    } else {
      d.errors = ErrorTriple::compose(Vec3::Zero(), Vec3::Zero(), est_.gamma_mix);
    }
    prob.errors = d.errors;

    Vec2 du_hat = Vec2::Zero();
    if (mode_ != PlannerMode::mpc) {
      if (prev_) d.raw_input = input_deltas(pose, measured_input, *prev_);
      const Vec4 chi = build_input(pose, measured_input, prev_ ? &*prev_ : nullptr, normalizer_);
      d.chi = chi;
      if (mode_ == PlannerMode::van && prev_)
        step_ = update_step_size(std::move(step_), uncertainty_level(chi, est_.basis));
      const Vec2 gamma = current_gamma();
      const BasisRows rows = basis_eval(chi, est_.basis);
      const Mat32 jac = input_jacobian(x, u, ocp_.wheel_radius);
      if (prev_)
        weights_ = update_weights(weights_, d.errors.e_c, jac, rows, gamma, dt, est_.weight_cap);
      const bool sabotaged = est_.force_zero_estimate && mode_ == PlannerMode::van;
      du_hat = sabotaged ? Vec2::Zero() : estimate_uncertainty(weights_, rows, gamma);
      prob.jac = jac;
      d.gamma = gamma;
      d.zeta_bar = step_.mean();
      d.weight_norm = weights_.norm();
    } else {
      prob.jac = input_jacobian(x, u, ocp_.wheel_radius);
    }
    prob.du_hat = du_hat;
    d.du_hat = du_hat;

    const OcpSolution sol =
        solve_ocp(prob, ocp_, prev_solution_ ? &*prev_solution_ : nullptr);

    d.status = sol.status;
    d.iterations = sol.iterations;
    d.objective = sol.objective;
    d.kkt_residual = sol.kkt_residual;
    d.max_gap = sol.max_gap;
    d.clf_active = ocp_.clf_enabled;
    d.clf_value = sol.clf_value;
    d.clf_slack = sol.slack;
    d.lyap_v = lyapunov_value(d.errors);
    d.lyap_vdot = lyapunov_derivative(prob, sol.u.front(), ocp_.wheel_radius);
    d.lyap_q = lyapunov_rate_bound(d.errors.e_c, ocp_.k_diag);
    d.predicted_next = RobotState::from_vec(sol.x[1]);

    prev_ = CyclePrediction{pose, RobotState::from_vec(sol.x[1]),
                            CommandInput::from_vec(sol.u[1]), du_hat};
    prev_solution_ = sol;
    return {CommandInput::from_vec(sol.u.front()), d};
  }

 private:
  PlannerMode mode_;
  OcpConfig ocp_;
  EstimatorConfig est_;
  NetworkWeights weights_;
  InputNormalizer normalizer_;
  StepSizeState step_;
  std::optional<CyclePrediction> prev_;
  std::optional<OcpSolution> prev_solution_;
};

}  // namespace vanmpc
