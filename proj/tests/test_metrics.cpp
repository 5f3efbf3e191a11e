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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vanmpc/metrics.hpp"

namespace vanmpc {
namespace {

MetricSeries timed(const std::vector<double>& distance) {
  MetricSeries s;
  for (std::size_t i = 0; i < distance.size(); ++i) s.time.push_back(0.1 * static_cast<double>(i));
  s.distance = distance;
  return s;
}

TEST(ComputeMetrics, ConstantDistance) {
  const MetricReport m = compute_metrics(timed(std::vector<double>(600, 0.1)), false);
  ASSERT_TRUE(m.t_r);
  EXPECT_EQ(*m.t_r, 0.0);
  EXPECT_NEAR(m.d_m, 0.1, 1e-12);
  EXPECT_NEAR(*m.d_mr, 0.1, 1e-12);
  EXPECT_NEAR(m.d_fp, 0.1, 1e-12);
  EXPECT_FALSE(m.e_rmsv);
  EXPECT_FALSE(m.t_re);
}

TEST(ComputeMetrics, RiseTimeAndPostRiseMean) {
  const MetricReport m = compute_metrics(timed({0.5, 0.4, 0.3, 0.25, 0.15, 0.1, 0.05}), false);
  ASSERT_TRUE(m.t_r);
  EXPECT_NEAR(*m.t_r, 0.4, 1e-12);
  EXPECT_NEAR(*m.d_mr, 0.1, 1e-12);
  EXPECT_NEAR(m.d_m, 1.75 / 7.0, 1e-12);
  EXPECT_NEAR(m.d_fp, 0.5, 1e-12);
}

TEST(ComputeMetrics, NeverRises) {
  const MetricReport m = compute_metrics(timed(std::vector<double>(50, 0.3)), false);
  EXPECT_FALSE(m.t_r);
  EXPECT_FALSE(m.d_mr);
}

TEST(ComputeMetrics, RelativeErrorCrossing) {
  MetricSeries s = timed({0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
  s.dv_true.assign(6, 0.2);
  s.dq_true.assign(6, 0.0);
  s.dv_hat = {0.0, 0.1, 0.25, 0.2, 0.18, 0.22};
  s.dq_hat.assign(6, 0.01);
  const MetricReport m = compute_metrics(s, true);
  ASSERT_TRUE(m.t_re);
  EXPECT_NEAR(*m.t_re, 0.2, 1e-12);
  // rel = 0.25, 0, -0.1, 0.1 from the crossing on.
  EXPECT_NEAR(*m.e_rmser, std::sqrt((0.0625 + 0.0 + 0.01 + 0.01) / 4.0), 1e-12);
  EXPECT_NEAR(*m.e_rmsq, 0.01, 1e-12);
  EXPECT_FALSE(compute_metrics(s, false).e_rmsv);
}

TEST(ComputeMetrics, ZeroTruthRowsAreSkipped) {
  MetricSeries s = timed({0.1, 0.1, 0.1});
  s.dv_true.assign(3, 0.0);
  s.dq_true.assign(3, 0.0);
  s.dv_hat.assign(3, 0.1);
  s.dq_hat.assign(3, 0.0);
  const MetricReport m = compute_metrics(s, true);
  EXPECT_FALSE(m.t_re);
  EXPECT_FALSE(m.e_rmser);
  EXPECT_NEAR(*m.e_rmsv, 0.1, 1e-12);
}

TEST(ComputeMetrics, RejectsEmptyRecord) {
  EXPECT_THROW(compute_metrics(MetricSeries{}, false), std::invalid_argument);
}

// Plain-loop recomputation of every indicator on random records.
TEST(ComputeMetrics, MatchesIndependentRecomputation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 50 + trial * 13;
    MetricSeries s;
    for (int i = 0; i < n; ++i) {
      s.time.push_back(0.1 * i);
      s.distance.push_back(0.6 * std::exp(-0.05 * i) + 0.05 * uni(rng));
      s.dv_true.push_back(0.2);
      s.dq_true.push_back(0.05 * uni(rng));
      s.dv_hat.push_back(0.2 * (1.0 - std::exp(-0.1 * i)) + 0.02 * (uni(rng) - 0.3));
      s.dq_hat.push_back(0.05 * uni(rng));
    }
    const MetricReport m = compute_metrics(s, true);

    double sum = 0.0, after = 0.0, cnt = 0.0, ev = 0.0, eq = 0.0;
    int rise = -1;
    for (int i = 0; i < n; ++i) {
      sum += s.distance[i];
      if (rise < 0 && s.distance[i] < 0.2) rise = i;
      if (rise >= 0) {
        after += s.distance[i];
        cnt += 1.0;
      }
      ev += std::pow(s.dv_hat[i] - s.dv_true[i], 2);
      eq += std::pow(s.dq_hat[i] - s.dq_true[i], 2);
    }
    EXPECT_NEAR(m.d_m, sum / n, 1e-12);
    ASSERT_GE(rise, 0);
    EXPECT_NEAR(*m.t_r, s.time[rise], 1e-12);
    EXPECT_NEAR(*m.d_mr, after / cnt, 1e-12);
    EXPECT_NEAR(*m.e_rmsv, std::sqrt(ev / n), 1e-12);
    EXPECT_NEAR(*m.e_rmsq, std::sqrt(eq / n), 1e-12);

    int cross = -1;
    for (int i = 1; i < n; ++i) {
      const double a = s.dv_hat[i - 1] / 0.2 - 1.0, b = s.dv_hat[i] / 0.2 - 1.0;
      if (b == 0.0 || (a < 0) != (b < 0)) {
        cross = i;
        break;
      }
    }
    ASSERT_GE(cross, 0);
    double rr = 0.0;
    for (int i = cross; i < n; ++i) rr += std::pow(s.dv_hat[i] / 0.2 - 1.0, 2);
    EXPECT_NEAR(*m.t_re, s.time[cross], 1e-12);
    EXPECT_NEAR(*m.e_rmser, std::sqrt(rr / (n - cross)), 1e-12);
  }
}

}  // namespace
}  // namespace vanmpc
