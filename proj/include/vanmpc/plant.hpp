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

// Ground-truth robot used in closed-loop simulation. The torque-level
// bottom controllers are abstracted as a first-order lag executing the
// planner command; the terrain enters as a command-level uncertainty du
// evaluated from an UncertaintyProfile.

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanmpc/kinematics.hpp"

namespace vanmpc {

struct PlantConfig {
  double wheel_radius = 0.2;     // R [m]
  double plant_substep = 0.02;   // bottom layer period [s]
  double planner_period = 0.1;   // [s]
  double execution_lag = 0.05;   // command tracking time constant [s]; 0 = perfect

  /// Number of plant substeps covering `duration`; throws if not an integer multiple.
  int substeps_for(double duration) const {
    if (!(duration > 0.0)) throw std::invalid_argument("plant step duration must be > 0");
    const double n = duration / plant_substep;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * std::max(1.0, n) || r < 1.0)
      throw std::invalid_argument("duration " + std::to_string(duration) +
                                  " is not a multiple of plant_substep");
    return static_cast<int>(r);
  }

  void validate() const {
    if (!(wheel_radius > 0.0)) throw std::invalid_argument("plant.wheel_radius must be > 0");
    if (!(plant_substep > 0.0)) throw std::invalid_argument("plant.plant_substep must be > 0");
    if (!(execution_lag >= 0.0)) throw std::invalid_argument("plant.execution_lag must be >= 0");
    substeps_for(planner_period);
  }
};

/// Command-level uncertainty as a function of pose and executed command.
///
/// terrain_table models du = (kv*v, kq*q + ks*sin(q)); spatial_switch picks
/// the first region whose x-interval contains the robot.
struct UncertaintyProfile {
  enum class Kind { none, proportional_velocity, terrain_table, spatial_switch };

  struct Region;

  Kind kind = Kind::none;
  std::string name = "none";
  double xi = 0.0;
  double velocity_gain = 0.0;
  double roll_gain = 0.0;
  double roll_sin_gain = 0.0;
  std::vector<Region> regions;
  Vec2 noise_std = Vec2::Zero();

  static UncertaintyProfile none() { return {}; }

  static UncertaintyProfile proportional_velocity(double xi_in) {
    UncertaintyProfile p;
    p.kind = Kind::proportional_velocity;
    p.name = "proportional_velocity";
    p.xi = xi_in;
    return p;
  }

  static UncertaintyProfile terrain_table(std::string table_name, double kv, double kq,
                                          double ks) {
    UncertaintyProfile p;
    p.kind = Kind::terrain_table;
    p.name = std::move(table_name);
    p.velocity_gain = kv;
    p.roll_gain = kq;
    p.roll_sin_gain = ks;
    return p;
  }

  static UncertaintyProfile spatial_switch(std::string switch_name, std::vector<Region> rs);

  UncertaintyProfile with_noise(double std_v, double std_q) const {
    UncertaintyProfile p = *this;
    p.noise_std = {std_v, std_q};
    return p;
  }

  /// Deterministic part plus `noise_std` scaled by the standard-normal draw.
  Vec2 evaluate(const Vec3& pose, const Vec2& cmd, const Vec2& normal_draw = Vec2::Zero()) const;

  /// Index of the active region (spatial_switch only), -1 otherwise.
  int active_region(const Vec3& pose) const;
};

struct UncertaintyProfile::Region {
  double x_min = -std::numeric_limits<double>::infinity();
  double x_max = std::numeric_limits<double>::infinity();
  UncertaintyProfile profile;

  bool contains(const Vec3& pose) const { return pose(0) >= x_min && pose(0) < x_max; }
};

inline UncertaintyProfile UncertaintyProfile::spatial_switch(std::string switch_name,
                                                             std::vector<Region> rs) {
  UncertaintyProfile p;
  p.kind = Kind::spatial_switch;
  p.name = std::move(switch_name);
  p.regions = std::move(rs);
  return p;
}

inline int UncertaintyProfile::active_region(const Vec3& pose) const {
  if (kind != Kind::spatial_switch) return -1;
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].contains(pose)) return static_cast<int>(i);
  return -1;
}

inline Vec2 UncertaintyProfile::evaluate(const Vec3& pose, const Vec2& cmd,
                                         const Vec2& normal_draw) const {
  Vec2 du = Vec2::Zero();
  switch (kind) {
    case Kind::none:
      break;
    case Kind::proportional_velocity:
      du(0) = xi * cmd(0);
      break;
    case Kind::terrain_table:
      du(0) = velocity_gain * cmd(0);
      du(1) = roll_gain * cmd(1) + roll_sin_gain * std::sin(cmd(1));
      break;
    case Kind::spatial_switch: {
      const int r = active_region(pose);
      if (r >= 0) du = regions[static_cast<std::size_t>(r)].profile.evaluate(pose, cmd, normal_draw);
      break;
    }
  }
  return du + noise_std.cwiseProduct(normal_draw);
}

/// f(x, u) - df/du(x, u) * du(x, u) with du drawn from the profile.
inline Vec3 true_derivative(const Vec3& x, const Vec2& u, const UncertaintyProfile& profile,
                            const PlantConfig& cfg, const Vec2& normal_draw = Vec2::Zero()) {
  if (profile.kind == UncertaintyProfile::Kind::none && profile.noise_std.isZero())
    return nominal_derivative(x, u, cfg.wheel_radius);
  const Vec2 du = profile.evaluate(x, u, normal_draw);
  return nominal_derivative(x, u, cfg.wheel_radius) - input_jacobian(x, u, cfg.wheel_radius) * du;
}

/// Pose plus the command currently realized by the bottom controllers.
struct PlantState {
  RobotState pose;
  CommandInput executed;
};

/// Integrates the plant over `duration` with fixed-step RK4 at plant_substep
/// resolution. The executed command follows `commanded` through a first-order
/// lag; the noise draw is held over the whole call.
inline PlantState step_plant(const PlantState& start, const CommandInput& commanded,
                             const UncertaintyProfile& profile, const PlantConfig& cfg,
                             double duration, const Vec2& normal_draw = Vec2::Zero()) {
  check_roll_domain(commanded.roll_angle);
  const int n = cfg.substeps_for(duration);
  const double h = cfg.plant_substep;
  const Vec2 target = commanded.vec();
  const bool lagged = cfg.execution_lag > 0.0;

  using Vec5 = Eigen::Matrix<double, 5, 1>;
  auto rhs = [&](const Vec5& s) {
    Vec5 d;
    const Vec2 u = lagged ? Vec2(s.tail<2>()) : target;
    d.head<3>() = true_derivative(s.head<3>(), u, profile, cfg, normal_draw);
    d.tail<2>() = lagged ? Vec2((target - u) / cfg.execution_lag) : Vec2::Zero();
    return d;
  };

  Vec5 s;
  s.head<3>() = start.pose.vec();
  s.tail<2>() = lagged ? start.executed.vec() : target;
  for (int i = 0; i < n; ++i) {
    const Vec5 k1 = rhs(s);
    const Vec5 k2 = rhs(s + 0.5 * h * k1);
    const Vec5 k3 = rhs(s + 0.5 * h * k2);
    const Vec5 k4 = rhs(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s(2) = wrap_angle(s(2));
  }
  return {RobotState::from_vec(s.head<3>()), CommandInput::from_vec(s.tail<2>())};
}

/// Convenience overload: the bottom layer is assumed to already execute `commanded`.
inline RobotState step_plant(const RobotState& start, const CommandInput& commanded,
                             const UncertaintyProfile& profile, const PlantConfig& cfg,
                             double duration) {
  return step_plant(PlantState{start, commanded}, commanded, profile, cfg, duration).pose;
}

/// Stateful simulated robot owned by one control loop.
class Plant {
 public:
  Plant(PlantConfig cfg, UncertaintyProfile profile, RobotState initial,
        CommandInput executed = {})
      : cfg_(cfg), profile_(std::move(profile)), state_{initial, executed} {
    cfg_.validate();
  }

  const PlantState& state() const { return state_; }
  const RobotState& pose() const { return state_.pose; }
  const PlantConfig& config() const { return cfg_; }
  const UncertaintyProfile& profile() const { return profile_; }

  /// Input as seen by on-board sensors: executed command minus the realized uncertainty.
  CommandInput measured_input() const {
    const Vec2 u = state_.executed.vec();
    return CommandInput::from_vec(u - profile_.evaluate(state_.pose.vec(), u, last_draw_));
  }

  /// True du the terrain applies to `cmd` at the current pose under `draw`.
  Vec2 true_uncertainty(const CommandInput& cmd, const Vec2& draw) const {
    return profile_.evaluate(state_.pose.vec(), cmd.vec(), draw);
  }

  void step(const CommandInput& commanded, double duration, const Vec2& normal_draw) {
    state_ = step_plant(state_, commanded, profile_, cfg_, duration, normal_draw);
    last_draw_ = normal_draw;
  }

 private:
  PlantConfig cfg_;
  UncertaintyProfile profile_;
  PlantState state_;
  Vec2 last_draw_ = Vec2::Zero();
};

}  // namespace vanmpc
