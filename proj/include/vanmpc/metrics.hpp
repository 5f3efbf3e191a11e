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

// Tracking indicators computed from a run:
//   t_r     first time the distance drops below 0.2 m
//   d_m     mean distance
//   d_mr    mean distance from t_r on
//   d_fp    first peak of the distance curve
//   e_rmsv  RMSE of the dv estimate      e_rmsq  RMSE of the dq_r estimate
//   t_re    first zero crossing of the relative dv estimation error
//   e_rmser RMSE of that relative error from t_re on

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vanmpc {

/// Columns of a run needed for the indicators. Estimate columns may be empty.
struct MetricSeries {
  std::vector<double> time;
  std::vector<double> distance;
  std::vector<double> dv_hat, dq_hat;    // estimates
  std::vector<double> dv_true, dq_true;  // ground truth
};

struct MetricReport {
  std::optional<double> t_r;
  double d_m = 0.0;
  std::optional<double> d_mr;
  double d_fp = 0.0;
  std::optional<double> e_rmsv;
  std::optional<double> e_rmsq;
  std::optional<double> t_re;
  std::optional<double> e_rmser;
};

inline constexpr double kRiseDistance = 0.2;
inline constexpr double kRelativeErrorMinTruth = 1e-6;

/// Centered moving average, window shrinks at the ends.
inline std::vector<double> moving_average(const std::vector<double>& v, int window) {
  const int n = static_cast<int>(v.size());
  const int half = window / 2;
  std::vector<double> out(v.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (int k = lo; k <= hi; ++k) s += v[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = s / (hi - lo + 1);
  }
  return out;
}

/// First strict local maximum of the 5-sample smoothed curve, reported as the
/// raw maximum inside that smoothing window. A curve that starts by falling
/// peaks at its first sample; one without any strict maximum reports its max.
inline double first_peak(const std::vector<double>& d) {
  if (d.empty()) return 0.0;
  const auto s = moving_average(d, 5);
  const std::size_t n = s.size();
  auto raw_max_around = [&](std::size_t i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(n - 1, i + 2);
    return *std::max_element(d.begin() + static_cast<long>(lo), d.begin() + static_cast<long>(hi) + 1);
  };
  if (n >= 2 && s[0] > s[1]) return raw_max_around(0);
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (s[i] > s[i - 1] && s[i] > s[i + 1]) return raw_max_around(i);
  return *std::max_element(d.begin(), d.end());
}

/// Relative error dv_hat/dv - 1 per row; rows without usable truth are NaN.
inline std::vector<double> relative_errors(const MetricSeries& s) {
  std::vector<double> r(s.time.size(), std::nan(""));
  if (s.dv_hat.size() != s.time.size() || s.dv_true.size() != s.time.size()) return r;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (std::abs(s.dv_true[i]) > kRelativeErrorMinTruth) r[i] = s.dv_hat[i] / s.dv_true[i] - 1.0;
  return r;
}

inline MetricReport compute_metrics(const MetricSeries& s, bool true_profile_known) {
  if (s.time.empty() || s.distance.size() != s.time.size())
    throw std::invalid_argument("compute_metrics needs a non-empty record");
  const std::size_t n = s.time.size();
  MetricReport m;

  std::optional<std::size_t> rise;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += s.distance[i];
    if (!rise && s.distance[i] < kRiseDistance) rise = i;
  }
  m.d_m = sum / static_cast<double>(n);
  if (rise) {
    m.t_r = s.time[*rise];
    double acc = 0.0;
    for (std::size_t i = *rise; i < n; ++i) acc += s.distance[i];
    m.d_mr = acc / static_cast<double>(n - *rise);
  }
  m.d_fp = first_peak(s.distance);

  const bool has_estimate = s.dv_hat.size() == n && s.dq_hat.size() == n;
  if (!true_profile_known || !has_estimate || s.dv_true.size() != n || s.dq_true.size() != n)
    return m;

  double ev = 0.0, eq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ev += (s.dv_hat[i] - s.dv_true[i]) * (s.dv_hat[i] - s.dv_true[i]);
    eq += (s.dq_hat[i] - s.dq_true[i]) * (s.dq_hat[i] - s.dq_true[i]);
  }
  m.e_rmsv = std::sqrt(ev / static_cast<double>(n));
  m.e_rmsq = std::sqrt(eq / static_cast<double>(n));

  const auto rel = relative_errors(s);
  std::optional<std::size_t> prev;
  std::optional<std::size_t> cross;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(rel[i])) continue;
    if (rel[i] == 0.0 || (prev && std::signbit(rel[i]) != std::signbit(rel[*prev]))) {
      cross = i;
      break;
    }
    prev = i;
  }
  if (cross) {
    m.t_re = s.time[*cross];
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = *cross; i < n; ++i) {
      if (std::isnan(rel[i])) continue;
      acc += rel[i] * rel[i];
      ++cnt;
    }
    if (cnt > 0) m.e_rmser = std::sqrt(acc / static_cast<double>(cnt));
  }
  return m;
}

}  // namespace vanmpc
