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

// Closed-loop experiment runner: planner at the planner period, plant in
// between, one RunRecord per (scenario, mode).

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanmpc/metrics.hpp"
#include "vanmpc/noise.hpp"
#include "vanmpc/plant.hpp"
#include "vanmpc/planner.hpp"
#include "vanmpc/trajectories.hpp"

namespace vanmpc {

struct Scenario {
  std::string name;
  UncertaintyProfile profile;
  std::string trajectory = "sine";
  double duration = 60.0;
  std::vector<PlannerMode> modes = all_modes();
  std::uint64_t seed = 1;
  bool true_profile_known = true;

  void validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("scenario '" + name + "': duration must be > 0");
    if (modes.empty()) throw std::invalid_argument("scenario '" + name + "': no planner modes");
  }
};

struct HarnessConfig {
  RobotState initial_pose{0.0, -0.5, 0.0};
  bool start_moving = false;  // executed command starts at the reference input instead of rest
  double divergence_bound = 100.0;  // [m] from the reference

  void validate() const {
    if (!initial_pose.finite()) throw std::invalid_argument("harness.initial_pose must be finite");
    if (!(divergence_bound > 0.0)) throw std::invalid_argument("harness.divergence_bound must be > 0");
  }
};

struct RunRow {
  int step = 0;
  double time = 0.0;
  RobotState actual;
  RobotState reference;
  CommandInput command;
  CommandInput measured_input;
  Vec2 du_true = Vec2::Zero();
  int region = -1;
  double distance = 0.0;
  PlanDiagnostics diag;
};

struct RunRecord {
  std::string scenario;
  PlannerMode mode = PlannerMode::mpc;
  std::vector<RunRow> rows;
  bool diverged = false;
  bool estimator_used = false;

  MetricSeries series() const {
    MetricSeries s;
    for (const auto& r : rows) {
      s.time.push_back(r.time);
      s.distance.push_back(r.distance);
      s.dv_true.push_back(r.du_true(0));
      s.dq_true.push_back(r.du_true(1));
      if (estimator_used) {
        s.dv_hat.push_back(r.diag.du_hat(0));
        s.dq_hat.push_back(r.diag.du_hat(1));
      }
    }
    return s;
  }
};

inline MetricReport compute_metrics(const RunRecord& rec, bool true_profile_known) {
  return compute_metrics(rec.series(), true_profile_known);
}

/// Runs one planner mode through a scenario.
inline RunRecord run_mode(const Scenario& sc, PlannerMode mode, const PlantConfig& plant_cfg,
                          OcpConfig ocp, const EstimatorConfig& est, const HarnessConfig& hc) {
  sc.validate();
  plant_cfg.validate();
  hc.validate();
  ocp.wheel_radius = plant_cfg.wheel_radius;
  ocp.dt = plant_cfg.planner_period;

  const double period = plant_cfg.planner_period;
  const auto steps = static_cast<int>(std::llround(sc.duration / period));
  const Trajectory traj = Trajectory::by_name(sc.trajectory, plant_cfg.wheel_radius);
  const ChannelNoise noise(sc.seed);

  Plant plant(plant_cfg, sc.profile, hc.initial_pose,
              hc.start_moving ? traj(0.0).input : CommandInput{});
  InstructionPlanner planner(mode, ocp, est);

  RunRecord rec;
  rec.scenario = sc.name;
  rec.mode = mode;
  rec.estimator_used = mode != PlannerMode::mpc;
  rec.rows.reserve(static_cast<std::size_t>(steps));

  for (int k = 0; k < steps; ++k) {
    const double t = k * period;
    const auto window = traj.window(t, period, ocp.horizon);
    const RobotState pose = plant.pose();
    const CommandInput measured = plant.measured_input();
    const PlanOutput out = planner.plan(pose, measured, window);
    const Vec2 draw = noise.draw(static_cast<std::uint64_t>(k));

    RunRow row;
    row.step = k;
    row.time = t;
    row.actual = pose;
    row.reference = window.front().state;
    row.command = out.command;
    row.measured_input = measured;
    row.du_true = plant.true_uncertainty(out.command, draw);
    row.region = sc.profile.active_region(pose.vec());
    row.distance = std::hypot(pose.x_pos - row.reference.x_pos, pose.y_pos - row.reference.y_pos);
    row.diag = out.diag;
    rec.rows.push_back(row);

    if (!(row.distance <= hc.divergence_bound) || !pose.finite()) {
      rec.diverged = true;
      break;
    }
    plant.step(out.command, period, draw);
  }
  return rec;
}

/// Runs every mode of the scenario sequentially.
inline std::map<PlannerMode, RunRecord> run_scenario(const Scenario& sc,
                                                     const PlantConfig& plant_cfg,
                                                     const OcpConfig& ocp,
                                                     const EstimatorConfig& est,
                                                     const HarnessConfig& hc) {
  std::map<PlannerMode, RunRecord> out;
  for (PlannerMode m : sc.modes) out.emplace(m, run_mode(sc, m, plant_cfg, ocp, est, hc));
  return out;
}

/// Synthetic terrain gains; terrain_table models du = (kv*v, kq*q + ks*sin(q)).
struct TerrainConfig {
  Vec3 rubber{0.08, 0.0, 0.02};
  Vec3 grass{0.25, 0.05, 0.0};
  double hollow_xi = 0.3;
  double hollow_noise_std = 0.05;  // [m/s]
  double varied_boundary_x = 0.0;  // rubber for x >= boundary, grass below

  void validate() const {
    if (!rubber.allFinite() || !grass.allFinite() || !std::isfinite(hollow_xi) ||
        !std::isfinite(varied_boundary_x))
      throw std::invalid_argument("terrain gains must be finite");
    if (!(hollow_noise_std >= 0.0)) throw std::invalid_argument("terrain.hollow_noise_std must be >= 0");
  }
};

inline UncertaintyProfile rubber_profile(const TerrainConfig& t = {}) {
  return UncertaintyProfile::terrain_table("rubber", t.rubber(0), t.rubber(1), t.rubber(2));
}
inline UncertaintyProfile hollow_tiles_profile(const TerrainConfig& t = {}) {
  return UncertaintyProfile::proportional_velocity(t.hollow_xi).with_noise(t.hollow_noise_std, 0.0);
}
inline UncertaintyProfile grass_profile(const TerrainConfig& t = {}) {
  return UncertaintyProfile::terrain_table("grass", t.grass(0), t.grass(1), t.grass(2));
}
inline UncertaintyProfile varied_profile(const TerrainConfig& t = {}) {
  const double inf = std::numeric_limits<double>::infinity();
  const double b = t.varied_boundary_x;
  return UncertaintyProfile::spatial_switch(
      "varied", {{b, inf, rubber_profile(t)}, {-inf, b, grass_profile(t)}});
}

/// Flat-floor artificial uncertainties plus the terrain suite.
inline std::vector<Scenario> artificial_uncertainty_suite(std::uint64_t seed = 1,
                                                          const TerrainConfig& t = {}) {
  t.validate();
  std::vector<Scenario> s;
  s.push_back({"flat_xi00", UncertaintyProfile::proportional_velocity(0.0), "sine", 60.0,
               all_modes(), seed, true});
  s.push_back({"flat_xi02", UncertaintyProfile::proportional_velocity(0.2), "sine", 60.0,
               all_modes(), seed, true});
  s.push_back({"flat_xi04", UncertaintyProfile::proportional_velocity(0.4), "sine", 60.0,
               all_modes(), seed, true});
  s.push_back({"rubber", rubber_profile(t), "sine", 60.0, all_modes(), seed, true});
  s.push_back({"hollow", hollow_tiles_profile(t), "sine", 60.0, all_modes(), seed, true});
  s.push_back({"grass", grass_profile(t), "sine", 60.0, all_modes(), seed, true});
  s.push_back({"varied", varied_profile(t), "gerono", 100.0, all_modes(), seed, true});
  return s;
}

inline const Scenario& find_scenario(const std::vector<Scenario>& suite, const std::string& name) {
  for (const auto& s : suite)
    if (s.name == name) return s;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

}  // namespace vanmpc
