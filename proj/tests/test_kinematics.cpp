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

#include <random>

#include <gtest/gtest.h>

#include "vanmpc/kinematics.hpp"

namespace vanmpc {
namespace {

constexpr double kR = 0.2;

TEST(WrapAngle, StaysInHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3.0 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(2.0 * kPi), 0.0, 1e-15);
}

TEST(NominalDerivative, StraightAhead) {
  const Vec3 d = nominal_derivative(Vec3(0, 0, 0), Vec2(1.0, 0.0), kR);
  EXPECT_DOUBLE_EQ(d(0), 1.0);
  EXPECT_DOUBLE_EQ(d(1), 0.0);
  EXPECT_DOUBLE_EQ(d(2), 0.0);
}

TEST(NominalDerivative, FacingNorth) {
  const Vec3 d = nominal_derivative(Vec3(0, 0, kPi / 2), Vec2(2.0, 0.0), kR);
  EXPECT_NEAR(d(0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(d(1), 2.0);
  EXPECT_DOUBLE_EQ(d(2), 0.0);
}

TEST(NominalDerivative, TurnRateFromRoll) {
  const Vec3 d = nominal_derivative(Vec3(0, 0, 0), Vec2(1.0, kPi / 4), kR);
  EXPECT_DOUBLE_EQ(d(0), 1.0);
  EXPECT_NEAR(d(2), 5.0, 1e-12);
}

TEST(NominalDerivative, RejectsRollAtRightAngle) {
  EXPECT_THROW(nominal_derivative(Vec3::Zero(), Vec2(1.0, kPi / 2), kR), RollDomainError);
  EXPECT_THROW(input_jacobian(Vec3::Zero(), Vec2(1.0, -kPi / 2), kR), RollDomainError);
}

TEST(InputJacobian, StraightAhead) {
  const Mat32 j = input_jacobian(Vec3(0, 0, 0), Vec2(1.0, 0.0), kR);
  Mat32 expected;
  expected << 1, 0, 0, 0, 0, 5;
  EXPECT_TRUE(j.isApprox(expected, 1e-14)) << j;
}

TEST(InputJacobian, StandingStillFacingNorth) {
  const Mat32 j = input_jacobian(Vec3(0, 0, kPi / 2), Vec2(0.0, 0.0), kR);
  EXPECT_NEAR(j(0, 0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(j(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(j(2, 0), 0.0);
  EXPECT_DOUBLE_EQ(j(2, 1), 0.0);
}

TEST(InputJacobian, MatchesCentralDifferencesOnRandomGrid) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> yaw(-kPi, kPi), vel(-1.5, 1.5), roll(-0.6, 0.6);
  const double h = 1e-6;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 x(0.0, 0.0, yaw(rng));
    const Vec2 u(vel(rng), roll(rng));
    const Mat32 j = input_jacobian(x, u, kR);
    for (int c = 0; c < 2; ++c) {
      Vec2 up = u, dn = u;
      up(c) += h;
      dn(c) -= h;
      const Vec3 fd = (nominal_derivative(x, up, kR) - nominal_derivative(x, dn, kR)) / (2 * h);
      for (int i = 0; i < 3; ++i)
        ASSERT_LT(std::abs(j(i, c) - fd(i)) / std::max(std::abs(fd(i)), 1e-3), 1e-5);
    }
  }
}

TEST(CompensatedDerivative, ZeroEstimateIsNominal) {
  const Vec3 x(0.3, -1.0, 0.7);
  const Vec2 u(0.8, -0.3);
  EXPECT_EQ(compensated_derivative(x, u, Vec2::Zero(), kR), nominal_derivative(x, u, kR));
}

TEST(CompensatedDerivative, SubtractsJacobianTimesEstimate) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int n = 0; n < 100; ++n) {
    const Vec3 x(uni(rng), uni(rng), 3.0 * uni(rng));
    const Vec2 u(1.5 * uni(rng), 0.6 * uni(rng));
    const Vec2 du(0.3 * uni(rng), 0.1 * uni(rng));
    const Vec3 expect = nominal_derivative(x, u, kR) - input_jacobian(x, u, kR) * du;
    EXPECT_TRUE(compensated_derivative(x, u, du, kR).isApprox(expect, 1e-12));
  }
}

TEST(CompensatedJacobians, MatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double h = 1e-6;
  for (int n = 0; n < 100; ++n) {
    const Vec3 x(uni(rng), uni(rng), 3.0 * uni(rng));
    const Vec2 u(1.5 * uni(rng), 0.6 * uni(rng));
    const Vec2 du(0.3 * uni(rng), 0.1 * uni(rng));
    const auto j = compensated_jacobians(x, u, du, kR);
    for (int c = 0; c < 3; ++c) {
      Vec3 a = x, b = x;
      a(c) += h;
      b(c) -= h;
      const Vec3 fd = (compensated_derivative(a, u, du, kR) - compensated_derivative(b, u, du, kR)) / (2 * h);
      EXPECT_LT((j.dx.col(c) - fd).lpNorm<Eigen::Infinity>(), 1e-6);
    }
    for (int c = 0; c < 2; ++c) {
      Vec2 a = u, b = u;
      a(c) += h;
      b(c) -= h;
      const Vec3 fd = (compensated_derivative(x, a, du, kR) - compensated_derivative(x, b, du, kR)) / (2 * h);
      EXPECT_LT((j.du.col(c) - fd).lpNorm<Eigen::Infinity>(), 1e-6);
    }
  }
}

TEST(Rk4Linearized, SensitivitiesMatchFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double h = 1e-6, dt = 0.1;
  for (int n = 0; n < 50; ++n) {
    const Vec3 x(uni(rng), uni(rng), 3.0 * uni(rng));
    const Vec2 u(1.5 * uni(rng), 0.6 * uni(rng));
    const Vec2 du(0.2 * uni(rng), 0.05 * uni(rng));
    const auto lin = rk4_step_linearized(x, u, du, dt, kR);
    EXPECT_LT(state_error(lin.next, rk4_step(x, u, du, dt, kR)).norm(), 1e-14);
    for (int c = 0; c < 3; ++c) {
      Vec3 a = x, b = x;
      a(c) += h;
      b(c) -= h;
      const Vec3 fd = state_error(rk4_step(a, u, du, dt, kR), rk4_step(b, u, du, dt, kR)) / (2 * h);
      EXPECT_LT((lin.a.col(c) - fd).lpNorm<Eigen::Infinity>(), 1e-6);
    }
    for (int c = 0; c < 2; ++c) {
      Vec2 a = u, b = u;
      a(c) += h;
      b(c) -= h;
      const Vec3 fd = state_error(rk4_step(x, a, du, dt, kR), rk4_step(x, b, du, dt, kR)) / (2 * h);
      EXPECT_LT((lin.b.col(c) - fd).lpNorm<Eigen::Infinity>(), 1e-6);
    }
  }
}

}  // namespace
}  // namespace vanmpc
