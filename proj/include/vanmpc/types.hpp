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

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vanmpc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

/// Planar pose in the world frame.
struct RobotState {
  double x_pos = 0.0;  // [m]
  double y_pos = 0.0;  // [m]
  double yaw = 0.0;    // [rad], (-pi, pi]

  static RobotState from_vec(const Vec3& v) { return {v(0), v(1), wrap_angle(v(2))}; }
  Vec3 vec() const { return {x_pos, y_pos, yaw}; }
  bool finite() const {
    return std::isfinite(x_pos) && std::isfinite(y_pos) && std::isfinite(yaw);
  }
};

/// Planner decision variable: forward velocity and roll angle of the pendulum.
struct CommandInput {
  double velocity = 0.0;    // [m/s]
  double roll_angle = 0.0;  // [rad], |q_r| < pi/2

  static CommandInput from_vec(const Vec2& v) { return {v(0), v(1)}; }
  Vec2 vec() const { return {velocity, roll_angle}; }
};

/// State difference with the yaw component wrapped.
inline Vec3 state_error(const Vec3& a, const Vec3& b) {
  Vec3 d = a - b;
  d(2) = wrap_angle(d(2));
  return d;
}

/// Raised when the roll angle leaves the open interval (-pi/2, pi/2).
class RollDomainError : public std::domain_error {
 public:
  explicit RollDomainError(double q)
      : std::domain_error("roll angle " + std::to_string(q) + " outside (-pi/2, pi/2)") {}
};

inline void check_roll_domain(double q) {
  if (!(std::abs(q) < 0.5 * kPi)) throw RollDomainError(q);
}

}  // namespace vanmpc
