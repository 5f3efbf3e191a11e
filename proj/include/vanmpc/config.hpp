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

// Experiment configuration as a JSON tree. Every key is optional on input
// (missing keys keep their defaults) but unknown keys are rejected, and
// to_json always writes the complete tree so a dumped config reproduces a run.
// Unbounded limits are written as null.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanmpc/harness.hpp"

namespace vanmpc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::vector<std::string> scenarios;  // empty: the whole built-in suite
  std::vector<std::string> modes;      // empty: all four planners
  std::size_t seed = 1;
  std::string output_dir = "vanmpc_out";
  bool emit_plot_data = false;
  int workers = 1;

  PlantConfig plant;
  OcpConfig planner;
  EstimatorConfig estimator;
  HarnessConfig harness;
  TerrainConfig terrain;

  /// Planner timing and radius always follow the plant.
  OcpConfig effective_planner() const {
    OcpConfig c = planner;
    c.dt = plant.planner_period;
    c.wheel_radius = plant.wheel_radius;
    return c;
  }

  std::vector<PlannerMode> selected_modes() const {
    if (modes.empty()) return all_modes();
    std::vector<PlannerMode> out;
    for (const auto& m : modes) out.push_back(parse_mode(m));
    return out;
  }

  /// Built-in scenarios filtered by `scenarios`, in suite order, with the mode selection applied.
  std::vector<Scenario> selected_scenarios() const {
    const auto suite = artificial_uncertainty_suite(seed, terrain);
    std::vector<Scenario> out;
    if (scenarios.empty()) {
      out = suite;
    } else {
      for (const auto& name : scenarios) out.push_back(find_scenario(suite, name));
    }
    const auto ms = selected_modes();
    for (auto& s : out) s.modes = ms;
    return out;
  }

  void validate() const {
    plant.validate();
    effective_planner().validate();
    estimator.validate();
    harness.validate();
    terrain.validate();
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (output_dir.empty()) throw std::invalid_argument("output_dir must not be empty");
    selected_scenarios();
  }
};

namespace detail {

using nlohmann::json;

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <int N>
json vec_json(const Eigen::Matrix<double, N, 1>& v) {
  json a = json::array();
  for (int i = 0; i < N; ++i) a.push_back(num(v(i)));
  return a;
}

/// Walks one JSON object, rejecting keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  /// Throws on the first key that was never asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + join(it.key()) + "'");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  void get(const std::string& key, double& out, double null_value = std::nan("")) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (v.is_null() && !std::isnan(null_value)) {
      out = null_value;
      return;
    }
    if (!v.is_number()) throw ConfigError(join(key) + " must be a number");
    out = v.get<double>();
  }
  void get(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(join(key) + " must be an integer");
    out = v.get<int>();
  }
  void get(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(join(key) + " must be a non-negative integer");
    out = v.get<std::size_t>();
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(join(key) + " must be true or false");
    out = v.get<bool>();
  }
  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(join(key) + " must be a string");
    out = v.get<std::string>();
  }
  void get(const std::string& key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(join(key) + " must be an array of strings");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(join(key) + " must be an array of strings");
      out.push_back(e.get<std::string>());
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(join(key) + " must be an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(join(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
  }
  /// Fixed-size vector; null entries become `null_value` (e.g. an open bound).
  template <int N>
  void get(const std::string& key, Eigen::Matrix<double, N, 1>& out,
           double null_value = std::nan("")) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N))
      throw ConfigError(join(key) + " must be an array of " + std::to_string(N) + " numbers");
    for (int i = 0; i < N; ++i) {
      const json& e = v[static_cast<std::size_t>(i)];
      if (e.is_null() && !std::isnan(null_value)) {
        out(i) = null_value;
      } else if (e.is_number()) {
        out(i) = e.get<double>();
      } else {
        throw ConfigError(join(key) + " must be an array of " + std::to_string(N) + " numbers");
      }
    }
  }
  const json& child(const std::string& key) { return (seen_.insert(key), j_.at(key)); }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using detail::num;
  using detail::vec_json;
  nlohmann::json j;
  j["scenarios"] = c.scenarios;
  j["modes"] = c.modes;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["emit_plot_data"] = c.emit_plot_data;
  j["workers"] = c.workers;

  j["plant"] = {{"wheel_radius", c.plant.wheel_radius},
                {"plant_substep", c.plant.plant_substep},
                {"planner_period", c.plant.planner_period},
                {"execution_lag", c.plant.execution_lag}};

  const auto& p = c.planner;
  j["planner"] = {{"horizon", p.horizon},
                  {"q_diag", vec_json(p.q_diag)},
                  {"r_diag", vec_json(p.r_diag)},
                  {"k_diag", vec_json(p.k_diag)},
                  {"state_box_enabled", p.state_box_enabled},
                  {"x_min", vec_json(p.x_min)},
                  {"x_max", vec_json(p.x_max)},
                  {"u_min", vec_json(p.u_min)},
                  {"u_max", vec_json(p.u_max)},
                  {"clf_enabled", p.clf_enabled},
                  {"clf_slack_weight", p.clf_slack_weight},
                  {"max_iterations", p.max_iterations},
                  {"kkt_tolerance", p.kkt_tolerance}};

  const auto& e = c.estimator;
  j["estimator"] = {{"basis",
                     {{"half_count", e.basis.half_count},
                      {"widths", e.basis.widths},
                      {"default_width", e.basis.default_width},
                      {"o0", e.basis.o0},
                      {"o1", e.basis.o1}}},
                    {"gamma_mix", e.gamma_mix},
                    {"buffer_capacity", e.buffer_capacity},
                    {"step_size",
                     {{"a_v", e.step.a_v},
                      {"b_v", e.step.b_v},
                      {"c_v", e.step.c_v},
                      {"a_q", e.step.a_q},
                      {"b_q", e.step.b_q},
                      {"c_q", e.step.c_q}}},
                    {"gamma_small", vec_json(e.gamma_small)},
                    {"gamma_large", vec_json(e.gamma_large)},
                    {"weight_cap", e.weight_cap},
                    {"norm_floor", e.norm_floor},
                    {"norm_window", e.norm_window},
                    {"force_zero_estimate", e.force_zero_estimate}};

  const auto& h = c.harness;
  j["harness"] = {{"initial_pose", {h.initial_pose.x_pos, h.initial_pose.y_pos, h.initial_pose.yaw}},
                  {"start_moving", h.start_moving},
                  {"divergence_bound", num(h.divergence_bound)}};

  const auto& t = c.terrain;
  j["terrain"] = {{"rubber", vec_json(t.rubber)},
                  {"grass", vec_json(t.grass)},
                  {"hollow_xi", t.hollow_xi},
                  {"hollow_noise_std", t.hollow_noise_std},
                  {"varied_boundary_x", t.varied_boundary_x}};
  return j;
}

/// Overlays `j` onto `base`; throws ConfigError on unknown keys or wrong types.
inline ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  const double inf = std::numeric_limits<double>::infinity();
  ExperimentConfig c = std::move(base);
  detail::Reader top(j, "");
  top.get("scenarios", c.scenarios);
  top.get("modes", c.modes);
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.get("emit_plot_data", c.emit_plot_data);
  top.get("workers", c.workers);

  if (top.has("plant")) {
    detail::Reader r(top.child("plant"), "plant");
    r.get("wheel_radius", c.plant.wheel_radius);
    r.get("plant_substep", c.plant.plant_substep);
    r.get("planner_period", c.plant.planner_period);
    r.get("execution_lag", c.plant.execution_lag);
    r.finish();
  }
  if (top.has("planner")) {
    detail::Reader r(top.child("planner"), "planner");
    auto& p = c.planner;
    r.get("horizon", p.horizon);
    r.get("q_diag", p.q_diag);
    r.get("r_diag", p.r_diag);
    r.get("k_diag", p.k_diag);
    r.get("state_box_enabled", p.state_box_enabled);
    r.get("x_min", p.x_min, -inf);
    r.get("x_max", p.x_max, inf);
    r.get("u_min", p.u_min);
    r.get("u_max", p.u_max);
    r.get("clf_enabled", p.clf_enabled);
    r.get("clf_slack_weight", p.clf_slack_weight);
    r.get("max_iterations", p.max_iterations);
    r.get("kkt_tolerance", p.kkt_tolerance);
    r.finish();
  }
  if (top.has("estimator")) {
    detail::Reader r(top.child("estimator"), "estimator");
    auto& e = c.estimator;
    if (r.has("basis")) {
      detail::Reader b(r.child("basis"), "estimator.basis");
      b.get("half_count", e.basis.half_count);
      b.get("widths", e.basis.widths);
      b.get("default_width", e.basis.default_width);
      b.get("o0", e.basis.o0);
      b.get("o1", e.basis.o1);
      b.finish();
    }
    r.get("gamma_mix", e.gamma_mix);
    r.get("buffer_capacity", e.buffer_capacity);
    if (r.has("step_size")) {
      detail::Reader s(r.child("step_size"), "estimator.step_size");
      s.get("a_v", e.step.a_v);
      s.get("b_v", e.step.b_v);
      s.get("c_v", e.step.c_v);
      s.get("a_q", e.step.a_q);
      s.get("b_q", e.step.b_q);
      s.get("c_q", e.step.c_q);
      s.finish();
    }
    r.get("gamma_small", e.gamma_small);
    r.get("gamma_large", e.gamma_large);
    r.get("weight_cap", e.weight_cap);
    r.get("norm_floor", e.norm_floor);
    r.get("norm_window", e.norm_window);
    r.get("force_zero_estimate", e.force_zero_estimate);
    r.finish();
  }
  if (top.has("harness")) {
    detail::Reader r(top.child("harness"), "harness");
    Vec3 pose = c.harness.initial_pose.vec();
    r.get("initial_pose", pose);
    c.harness.initial_pose = RobotState::from_vec(pose);
    r.get("start_moving", c.harness.start_moving);
    r.get("divergence_bound", c.harness.divergence_bound, inf);
    r.finish();
  }
  if (top.has("terrain")) {
    detail::Reader r(top.child("terrain"), "terrain");
    r.get("rubber", c.terrain.rubber);
    r.get("grass", c.terrain.grass);
    r.get("hollow_xi", c.terrain.hollow_xi);
    r.get("hollow_noise_std", c.terrain.hollow_noise_std);
    r.get("varied_boundary_x", c.terrain.varied_boundary_x);
    r.finish();
  }
  top.finish();
  return c;
}

/// Parses config text; errors name the offending key.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json(j, std::move(base));
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string dump_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace vanmpc
