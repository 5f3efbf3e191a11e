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
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanmpc/types.hpp"

namespace vanmpc {

struct ReferenceSample {
  RobotState state;
  CommandInput input;
  Vec3 derivative = Vec3::Zero();
  double time = 0.0;
};

namespace detail {

// Reference inputs by flat-output inversion of the kinematic model:
// v = |p'|, q_r = atan(R * yaw' / v).
inline ReferenceSample from_path(double t, double x, double y, double dx, double dy,
                                 double yaw, double yaw_rate, double wheel_radius) {
  ReferenceSample s;
  s.time = t;
  s.state = {x, y, wrap_angle(yaw)};
  s.derivative = {dx, dy, yaw_rate};
  const double v = std::hypot(dx, dy);
  s.input.velocity = v;
  s.input.roll_angle = v > 0.0 ? std::atan(wheel_radius * yaw_rate / v) : 0.0;
  return s;
}

}  // namespace detail

/// X = 0.5 t, Y = 2 sin(0.25 t), yaw = atan(cos(0.25 t)).
inline ReferenceSample sine_wave(double t, double wheel_radius = 0.2) {
  const double c = std::cos(0.25 * t);
  const double s = std::sin(0.25 * t);
  const double yaw_rate = -0.25 * s / (1.0 + c * c);
  return detail::from_path(t, 0.5 * t, 2.0 * s, 0.5, 0.5 * c, std::atan(c), yaw_rate,
                           wheel_radius);
}

/// Lemniscate of Gerono: X = 8 sin(t/16), Y = 8 sin(t/16) cos(t/16).
///
/// The sign-switched heading atan2(cos(t/8)/cos(t/16) * S, S), S = sgn(cos(t/16)),
/// equals atan2(cos(t/8), cos(t/16)) wherever cos(t/16) != 0, and the latter
/// is its continuous extension across t = 8 pi and t = 24 pi (mod 32 pi),
/// where the heading is -pi/2 at both.
inline ReferenceSample lemniscate(double t, double wheel_radius = 0.2) {
  const double a = std::cos(t / 16.0);
  const double b = std::cos(t / 8.0);
  const double sa = std::sin(t / 16.0);
  const double da = -sa / 16.0;
  const double db = -std::sin(t / 8.0) / 8.0;
  const double yaw = std::atan2(b, a);
  const double yaw_rate = (a * db - b * da) / (a * a + b * b);
  return detail::from_path(t, 8.0 * sa, 8.0 * sa * a, 0.5 * a, 0.5 * b, yaw, yaw_rate,
                           wheel_radius);
}

inline ReferenceSample constant_pose(double t, const RobotState& pose) {
  ReferenceSample s;
  s.time = t;
  s.state = pose;
  return s;
}

/// Reference generator addressable by name.
class Trajectory {
 public:
  Trajectory(std::string name, std::function<ReferenceSample(double)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}

  /// Known names: "sine", "gerono" (alias "lemniscate").
  static Trajectory by_name(const std::string& name, double wheel_radius) {
    if (name == "sine")
      return {"sine", [wheel_radius](double t) { return sine_wave(t, wheel_radius); }};
    if (name == "gerono" || name == "lemniscate")
      return {"gerono", [wheel_radius](double t) { return lemniscate(t, wheel_radius); }};
    throw std::invalid_argument("unknown trajectory '" + name + "'");
  }

  static Trajectory constant(const RobotState& pose) {
    return {"constant", [pose](double t) { return constant_pose(t, pose); }};
  }

  const std::string& name() const { return name_; }
  ReferenceSample operator()(double t) const { return fn_(t); }

  /// Samples at t0, t0 + dt, ..., t0 + count*dt (count + 1 entries).
  std::vector<ReferenceSample> window(double t0, double dt, int count) const {
    std::vector<ReferenceSample> w;
    w.reserve(static_cast<std::size_t>(count) + 1);
    for (int i = 0; i <= count; ++i) w.push_back(fn_(t0 + i * dt));
    return w;
  }

 private:
  std::string name_;
  std::function<ReferenceSample(double)> fn_;
};

/// Model-prediction, tracking, and composite errors for one control cycle.
struct ErrorTriple {
  Vec3 e_e = Vec3::Zero();
  Vec3 e_r = Vec3::Zero();
  Vec3 e_c = Vec3::Zero();
  double gamma = 0.8;

  static ErrorTriple compose(const Vec3& e_e, const Vec3& e_r, double gamma) {
    return {e_e, e_r, gamma * e_e + (1.0 - gamma) * e_r, gamma};
  }
};

inline ErrorTriple tracking_errors(const RobotState& actual, const RobotState& reference,
                                   const RobotState& predicted_prev, double gamma) {
  const Vec3 x = actual.vec();
  return ErrorTriple::compose(state_error(x, predicted_prev.vec()),
                              state_error(x, reference.vec()), gamma);
}

inline ErrorTriple tracking_errors(const RobotState& actual, const ReferenceSample& ref,
                                   const RobotState& predicted_prev, double gamma) {
  return tracking_errors(actual, ref.state, predicted_prev, gamma);
}

}  // namespace vanmpc
