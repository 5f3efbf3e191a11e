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

// Two-output RBF network representing the command compensation du.
//
// Both sub-networks share the 2m+1 centers c_j = ((j-m)/m) * (1,1,1,1) but see
// the 4-d input through different diagonal metrics:
//   O_0 = diag(o0, 1-o0, 0, 0)   (distance / velocity channels -> dv)
//   O_1 = diag(0, 0, o1, 1-o1)   (yaw / roll channels         -> dq_r)
// The estimate is du = Gamma * (h_1 W_1, h_2 W_2).

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanmpc/trajectories.hpp"
#include "vanmpc/types.hpp"

namespace vanmpc {

struct RbfBasisConfig {
  int half_count = 5;                   // m
  std::vector<double> widths;           // b_j; empty -> all default_width
  double default_width = 0.4;
  double o0 = 0.5;
  double o1 = 0.5;

  int centers() const { return 2 * half_count + 1; }

  double width(int j) const {
    return widths.empty() ? default_width : widths[static_cast<std::size_t>(j)];
  }

  double center(int j) const {
    return static_cast<double>(j - half_count) / static_cast<double>(half_count);
  }

  Vec4 metric(int k) const {
    return k == 0 ? Vec4(o0, 1.0 - o0, 0.0, 0.0) : Vec4(0.0, 0.0, o1, 1.0 - o1);
  }

  void validate() const {
    if (half_count < 1) throw std::invalid_argument("estimator.basis.half_count must be >= 1");
    if (!widths.empty() && static_cast<int>(widths.size()) != centers())
      throw std::invalid_argument("estimator.basis.widths must have 2m+1 entries");
    for (int j = 0; j < centers(); ++j)
      if (!(width(j) > 0.0)) throw std::invalid_argument("estimator.basis widths must be > 0");
    if (!(o0 > 0.0 && o0 < 1.0)) throw std::invalid_argument("estimator.basis.o0 must be in (0,1)");
    if (!(o1 > 0.0 && o1 < 1.0)) throw std::invalid_argument("estimator.basis.o1 must be in (0,1)");
  }
};

/// ||chi - c_j||^2 in metric O_k.
inline double weighted_sq_distance(const Vec4& chi, int j, int k, const RbfBasisConfig& cfg) {
  const Vec4 d = chi - Vec4::Constant(cfg.center(j));
  return d.cwiseProduct(d).dot(cfg.metric(k));
}

/// Hidden-layer activations of the two sub-networks.
struct BasisRows {
  Eigen::VectorXd h1;
  Eigen::VectorXd h2;
};

inline BasisRows basis_eval(const Vec4& chi, const RbfBasisConfig& cfg) {
  const int n = cfg.centers();
  BasisRows rows{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int j = 0; j < n; ++j) {
    const double b2 = cfg.width(j) * cfg.width(j);
    rows.h1(j) = std::exp(-weighted_sq_distance(chi, j, 0, cfg) / b2);
    rows.h2(j) = std::exp(-weighted_sq_distance(chi, j, 1, cfg) / b2);
  }
  return rows;
}

/// Diagonal of a 2x2 matrix as a 2-vector.
inline Vec2 d2m(const Mat2& a) { return {a(0, 0), a(1, 1)}; }

/// Output weights, (2m+1) x 2.
struct NetworkWeights {
  Eigen::MatrixXd w;

  static NetworkWeights zeros(int centers) { return {Eigen::MatrixXd::Zero(centers, 2)}; }
  double norm() const { return w.norm(); }
};

/// du_hat = Gamma * d2m(h W).
inline Vec2 estimate_uncertainty(const NetworkWeights& weights, const BasisRows& rows,
                                 const Vec2& gamma) {
  return {gamma(0) * rows.h1.dot(weights.w.col(0)), gamma(1) * rows.h2.dot(weights.w.col(1))};
}

/// One Euler step of the Lyapunov adaptive law:
///   W_1' = -Gamma_1 * (e_c^T J_u[:,0]) * h_1,  W_2' = -Gamma_2 * (e_c^T J_u[:,1]) * h_2
/// followed by projection onto ||W||_F <= cap (cap <= 0 disables it).
inline NetworkWeights update_weights(const NetworkWeights& weights, const Vec3& e_c,
                                     const Mat32& jac, const BasisRows& rows, const Vec2& gamma,
                                     double dt, double cap = 50.0) {
  if (!(dt > 0.0)) throw std::invalid_argument("update_weights: dt must be > 0");
  const Eigen::RowVector2d g = e_c.transpose() * jac;
  NetworkWeights out = weights;
  out.w.col(0) -= dt * gamma(0) * g(0) * rows.h1;
  out.w.col(1) -= dt * gamma(1) * g(1) * rows.h2;
  if (cap > 0.0) {
    const double n = out.w.norm();
    if (n > cap) out.w *= cap / n;
  }
  return out;
}

/// Running per-channel max-abs scaling of the network input.
struct InputNormalizer {
  Vec4 running_max = Vec4::Zero();
  double floor = 1e-3;
  std::size_t window = 0;      // 0: max over the whole run, else over the newest `window` inputs
  std::deque<Vec4> recent;     // absolute raw inputs inside the window

  Vec4 apply(const Vec4& raw) {
    if (window == 0) {
      running_max = running_max.cwiseMax(raw.cwiseAbs());
    } else {
      recent.push_back(raw.cwiseAbs());
      while (recent.size() > window) recent.pop_front();
      running_max.setZero();
      for (const auto& a : recent) running_max = running_max.cwiseMax(a);
    }
    Vec4 chi;
    for (int i = 0; i < 4; ++i) {
      chi(i) = std::clamp(raw(i) / std::max(running_max(i), floor), -1.0, 1.0);
    }
    return chi;
  }
};

/// Quantities from the previous cycle that the input builder compares against.
struct CyclePrediction {
  RobotState start;            // pose when the previous plan was made (A)
  RobotState predicted;        // x(1|k-1) (C)
  CommandInput next_command;   // u(1|k-1)
  Vec2 estimate = Vec2::Zero();  // du_hat used by the previous plan
};

/// Raw deltas (dd, dv, dyaw, dq) before normalization.
inline Vec4 input_deltas(const RobotState& measured_pose, const CommandInput& measured_input,
                         const CyclePrediction& prev) {
  const double d_ab = std::hypot(measured_pose.x_pos - prev.start.x_pos,
                                 measured_pose.y_pos - prev.start.y_pos);
  const double d_ac = std::hypot(prev.predicted.x_pos - prev.start.x_pos,
                                 prev.predicted.y_pos - prev.start.y_pos);
  return {d_ab - d_ac,
          measured_input.velocity - prev.next_command.velocity + prev.estimate(0),
          wrap_angle(measured_pose.yaw - prev.predicted.yaw),
          measured_input.roll_angle - prev.next_command.roll_angle + prev.estimate(1)};
}

/// Normalized network input; zero when no previous prediction exists.
inline Vec4 build_input(const RobotState& measured_pose, const CommandInput& measured_input,
                        const CyclePrediction* prev, InputNormalizer& norm) {
  if (prev == nullptr) return Vec4::Zero();
  return norm.apply(input_deltas(measured_pose, measured_input, *prev));
}

/// Discretized level of uncompensated uncertainty, one value per sub-network.
/// Ties resolve toward the smaller center index.
inline Vec2 uncertainty_level(const Vec4& chi, const RbfBasisConfig& cfg) {
  Vec2 zeta;
  for (int k = 0; k < 2; ++k) {
    int best = 0;
    double best_d = weighted_sq_distance(chi, 0, k, cfg);
    for (int j = 1; j < cfg.centers(); ++j) {
      const double d = weighted_sq_distance(chi, j, k, cfg);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    zeta(k) = cfg.center(best);
  }
  return zeta;
}

/// Quadratic step-size law: Gamma_i = min(a_i * zeta_bar_i^2 + b_i, c_i).
struct StepSizeParams {
  double a_v = 8.0, b_v = 0.3, c_v = 1.5;
  double a_q = 0.3, b_q = 0.06, c_q = 0.15;

  void validate() const {
    if (!(a_v >= 0.0 && a_q >= 0.0)) throw std::invalid_argument("step size a must be >= 0");
    if (!(b_v > 0.0 && b_q > 0.0)) throw std::invalid_argument("step size b must be > 0");
    if (!(c_v >= b_v && c_q >= b_q)) throw std::invalid_argument("step size needs c >= b");
  }
};

/// Replay buffer of recent levels and the resulting Gamma.
struct StepSizeState {
  std::deque<Vec2> buffer;
  std::size_t capacity = 10;
  StepSizeParams params;
  Vec2 gamma{0.3, 0.06};

  static StepSizeState initial(const StepSizeParams& p, std::size_t capacity) {
    StepSizeState s;
    s.params = p;
    s.capacity = capacity;
    s.gamma = {p.b_v, p.b_q};
    return s;
  }

  Vec2 mean() const {
    Vec2 m = Vec2::Zero();
    if (buffer.empty()) return m;
    for (const auto& z : buffer) m += z;
    return m / static_cast<double>(buffer.size());
  }
};

inline Vec2 step_size_for(const Vec2& zeta_bar, const StepSizeParams& p) {
  return {std::min(p.a_v * zeta_bar(0) * zeta_bar(0) + p.b_v, p.c_v),
          std::min(p.a_q * zeta_bar(1) * zeta_bar(1) + p.b_q, p.c_q)};
}

inline StepSizeState update_step_size(StepSizeState step, const Vec2& zeta) {
  step.buffer.push_back(zeta);
  while (step.buffer.size() > step.capacity) step.buffer.pop_front();
  step.gamma = step_size_for(step.mean(), step.params);
  return step;
}

}  // namespace vanmpc
