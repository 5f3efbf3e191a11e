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

// Kinematic model of the pendulum-driven spherical robot.
//
//   X' = v cos(yaw)
//   Y' = v sin(yaw)
//   yaw' = v tan(q_r) / R
//
// Every uncertainty in the kinodynamics is folded into a command
// compensation du = (dv, dq_r) entering through the input Jacobian:
//
//   x' = f(x, u) - df/du(x, u) * du
//
// The same compensated form drives the plant (with the true du) and the
// planner's prediction model (with the network estimate).

#pragma once

#include <cmath>

#include "vanmpc/types.hpp"

namespace vanmpc {

inline Vec3 nominal_derivative(const Vec3& x, const Vec2& u, double wheel_radius) {
  check_roll_domain(u(1));
  const double v = u(0);
  return {v * std::cos(x(2)), v * std::sin(x(2)), v * std::tan(u(1)) / wheel_radius};
}

/// Analytic df/du; column 0 is d/dv, column 1 is d/dq_r.
inline Mat32 input_jacobian(const Vec3& x, const Vec2& u, double wheel_radius) {
  check_roll_domain(u(1));
  const double c = std::cos(u(1));
  Mat32 j;
  j << std::cos(x(2)), 0.0,
       std::sin(x(2)), 0.0,
       std::tan(u(1)) / wheel_radius, u(0) / (c * c * wheel_radius);
  return j;
}

/// x' = f(x, u) - df/du(x, u) * du.
inline Vec3 compensated_derivative(const Vec3& x, const Vec2& u, const Vec2& du,
                                   double wheel_radius) {
  check_roll_domain(u(1));
  const double v_eff = u(0) - du(0);
  const double t = std::tan(u(1));
  const double sec2 = 1.0 + t * t;
  return {v_eff * std::cos(x(2)), v_eff * std::sin(x(2)),
          (v_eff * t - u(0) * du(1) * sec2) / wheel_radius};
}

/// Jacobians of compensated_derivative with du held fixed.
struct DerivativeJacobians {
  Mat3 dx;
  Mat32 du;
};

inline DerivativeJacobians compensated_jacobians(const Vec3& x, const Vec2& u, const Vec2& du,
                                                 double wheel_radius) {
  check_roll_domain(u(1));
  const double v_eff = u(0) - du(0);
  const double cy = std::cos(x(2));
  const double sy = std::sin(x(2));
  const double t = std::tan(u(1));
  const double sec2 = 1.0 + t * t;
  DerivativeJacobians j;
  j.dx.setZero();
  j.dx(0, 2) = -v_eff * sy;
  j.dx(1, 2) = v_eff * cy;
  j.du << cy, 0.0,
          sy, 0.0,
          (t - du(1) * sec2) / wheel_radius,
          (v_eff * sec2 - 2.0 * u(0) * du(1) * sec2 * t) / wheel_radius;
  return j;
}

/// One classic RK4 step of the compensated model; inputs held constant.
inline Vec3 rk4_step(const Vec3& x, const Vec2& u, const Vec2& du, double dt,
                     double wheel_radius) {
  const Vec3 k1 = compensated_derivative(x, u, du, wheel_radius);
  const Vec3 k2 = compensated_derivative(x + 0.5 * dt * k1, u, du, wheel_radius);
  const Vec3 k3 = compensated_derivative(x + 0.5 * dt * k2, u, du, wheel_radius);
  const Vec3 k4 = compensated_derivative(x + dt * k3, u, du, wheel_radius);
  Vec3 next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  next(2) = wrap_angle(next(2));
  return next;
}

/// RK4 step together with its exact sensitivities w.r.t. the start state and input.
struct Rk4Linearization {
  Vec3 next;
  Mat3 a;   // d next / d x
  Mat32 b;  // d next / d u
};

inline Rk4Linearization rk4_step_linearized(const Vec3& x, const Vec2& u, const Vec2& du,
                                            double dt, double wheel_radius) {
  const Mat3 eye = Mat3::Identity();

  const Vec3 k1 = compensated_derivative(x, u, du, wheel_radius);
  const auto j1 = compensated_jacobians(x, u, du, wheel_radius);
  const Mat3 k1x = j1.dx;
  const Mat32 k1u = j1.du;

  const Vec3 x2 = x + 0.5 * dt * k1;
  const Vec3 k2 = compensated_derivative(x2, u, du, wheel_radius);
  const auto j2 = compensated_jacobians(x2, u, du, wheel_radius);
  const Mat3 k2x = j2.dx * (eye + 0.5 * dt * k1x);
  const Mat32 k2u = j2.dx * (0.5 * dt * k1u) + j2.du;

  const Vec3 x3 = x + 0.5 * dt * k2;
  const Vec3 k3 = compensated_derivative(x3, u, du, wheel_radius);
  const auto j3 = compensated_jacobians(x3, u, du, wheel_radius);
  const Mat3 k3x = j3.dx * (eye + 0.5 * dt * k2x);
  const Mat32 k3u = j3.dx * (0.5 * dt * k2u) + j3.du;

  const Vec3 x4 = x + dt * k3;
  const Vec3 k4 = compensated_derivative(x4, u, du, wheel_radius);
  const auto j4 = compensated_jacobians(x4, u, du, wheel_radius);
  const Mat3 k4x = j4.dx * (eye + dt * k3x);
  const Mat32 k4u = j4.dx * (dt * k3u) + j4.du;

  Rk4Linearization out;
  out.next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.next(2) = wrap_angle(out.next(2));
  out.a = eye + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  out.b = dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  return out;
}

}  // namespace vanmpc
