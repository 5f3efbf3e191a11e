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

#include "vanmpc/estimator.hpp"
#include "vanmpc/kinematics.hpp"

namespace vanmpc {
namespace {

Vec4 random_chi(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  return {uni(rng), uni(rng), uni(rng), uni(rng)};
}

TEST(RbfBasisConfig, CentersAreEquispaced) {
  RbfBasisConfig cfg;
  EXPECT_EQ(cfg.centers(), 11);
  EXPECT_DOUBLE_EQ(cfg.center(0), -1.0);
  EXPECT_DOUBLE_EQ(cfg.center(5), 0.0);
  EXPECT_DOUBLE_EQ(cfg.center(10), 1.0);
  EXPECT_DOUBLE_EQ(cfg.center(7), 0.4);
}

TEST(RbfBasisConfig, Validation) {
  RbfBasisConfig cfg;
  cfg.o0 = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RbfBasisConfig{};
  cfg.half_count = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RbfBasisConfig{};
  cfg.widths = {1.0, 1.0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RbfBasisConfig{};
  cfg.default_width = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(BasisEval, ZeroInputHitsMiddleCenter) {
  const RbfBasisConfig cfg;
  const BasisRows h = basis_eval(Vec4::Zero(), cfg);
  EXPECT_DOUBLE_EQ(h.h1(5), 1.0);
  EXPECT_DOUBLE_EQ(h.h2(5), 1.0);
}

TEST(BasisEval, HandEvaluatedSmallNetwork) {
  RbfBasisConfig cfg;
  cfg.half_count = 1;
  cfg.default_width = 1.0;
  cfg.o0 = 0.5;
  const BasisRows h = basis_eval(Vec4(1, 1, 0, 0), cfg);
  EXPECT_DOUBLE_EQ(h.h1(2), 1.0);
  EXPECT_NEAR(h.h1(0), std::exp(-4.0), 1e-15);
  EXPECT_NEAR(h.h1(1), std::exp(-1.0), 1e-15);
}

TEST(BasisEval, EntriesInUnitInterval) {
  std::mt19937_64 rng(1);
  const RbfBasisConfig cfg;
  for (int n = 0; n < 200; ++n) {
    const BasisRows h = basis_eval(random_chi(rng), cfg);
    EXPECT_TRUE((h.h1.array() > 0.0).all() && (h.h1.array() <= 1.0).all());
    EXPECT_TRUE((h.h2.array() > 0.0).all() && (h.h2.array() <= 1.0).all());
  }
}

TEST(BasisEval, EachRowSeesOnlyItsOwnChannels) {
  std::mt19937_64 rng(2);
  const RbfBasisConfig cfg;
  for (int n = 0; n < 200; ++n) {
    const Vec4 a = random_chi(rng);
    const Vec4 b = random_chi(rng);
    Vec4 mix1 = a, mix2 = a;
    mix1.tail<2>() = b.tail<2>();
    mix2.head<2>() = b.head<2>();
    EXPECT_EQ(basis_eval(a, cfg).h1, basis_eval(mix1, cfg).h1);
    EXPECT_EQ(basis_eval(a, cfg).h2, basis_eval(mix2, cfg).h2);
  }
}

TEST(EstimateUncertainty, ZeroWeightsGiveZero) {
  const RbfBasisConfig cfg;
  const BasisRows h = basis_eval(Vec4(0.3, -0.2, 0.5, 0.1), cfg);
  EXPECT_EQ(estimate_uncertainty(NetworkWeights::zeros(cfg.centers()), h, Vec2(1.0, 0.1)),
            Vec2::Zero());
}

TEST(EstimateUncertainty, DiagonalExtraction) {
  Mat2 a;
  a << 1, 2, 3, 4;
  EXPECT_EQ(d2m(a), Vec2(1, 4));
}

TEST(EstimateUncertainty, ScalesByStepSize) {
  // One center with h = 1, so h_k W_k is the weight itself.
  BasisRows h{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  NetworkWeights w{Eigen::MatrixXd(1, 2)};
  w.w << 0.5, 0.1;
  const Vec2 du = estimate_uncertainty(w, h, Vec2(0.5, 0.1));
  EXPECT_NEAR(du(0), 0.25, 1e-15);
  EXPECT_NEAR(du(1), 0.01, 1e-15);
}

TEST(UpdateWeights, ZeroErrorLeavesWeights) {
  const RbfBasisConfig cfg;
  std::mt19937_64 rng(4);
  NetworkWeights w{Eigen::MatrixXd::Random(cfg.centers(), 2)};
  const BasisRows h = basis_eval(random_chi(rng), cfg);
  const Mat32 jac = input_jacobian(Vec3(0, 0, 0.3), Vec2(1.0, 0.1), 0.2);
  EXPECT_EQ(update_weights(w, Vec3::Zero(), jac, h, Vec2(1.0, 0.1), 0.1).w, w.w);
}

TEST(UpdateWeights, ZeroStepSizeLeavesWeights) {
  const RbfBasisConfig cfg;
  NetworkWeights w{Eigen::MatrixXd::Random(cfg.centers(), 2)};
  const BasisRows h = basis_eval(Vec4(0.1, 0.2, 0.3, 0.4), cfg);
  const Mat32 jac = input_jacobian(Vec3(0, 0, 0.3), Vec2(1.0, 0.1), 0.2);
  EXPECT_EQ(update_weights(w, Vec3(1, -2, 0.5), jac, h, Vec2::Zero(), 0.1).w, w.w);
}

TEST(UpdateWeights, ScalarHandExample) {
  // e_c = (1,0,0), first Jacobian column (1,0,0), one-hot h_1 at j = 3,
  // Gamma_1 = 0.5, dt = 0.1: W_1[3] drops by 0.05.
  const int n = 11, j = 3;
  BasisRows h{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  h.h1(j) = 1.0;
  Mat32 jac = Mat32::Zero();
  jac(0, 0) = 1.0;
  const NetworkWeights w0 = NetworkWeights::zeros(n);
  const NetworkWeights w1 = update_weights(w0, Vec3(1, 0, 0), jac, h, Vec2(0.5, 0.1), 0.1);
  EXPECT_NEAR(w1.w(j, 0), -0.05, 1e-15);
  EXPECT_EQ((w1.w - w0.w).cwiseAbs().sum(), std::abs(w1.w(j, 0)));
}

TEST(UpdateWeights, ProjectsOntoNormCap) {
  const RbfBasisConfig cfg;
  NetworkWeights w{Eigen::MatrixXd::Constant(cfg.centers(), 2, 12.0)};
  ASSERT_GT(w.norm(), 50.0);
  const BasisRows h = basis_eval(Vec4::Zero(), cfg);
  const Mat32 jac = input_jacobian(Vec3::Zero(), Vec2(1.0, 0.1), 0.2);
  const NetworkWeights out = update_weights(w, Vec3(1, 0, 0), jac, h, Vec2(1, 0.1), 0.1, 50.0);
  EXPECT_NEAR(out.norm(), 50.0, 1e-9);
  EXPECT_THROW(update_weights(w, Vec3(1, 0, 0), jac, h, Vec2(1, 0.1), 0.0), std::invalid_argument);
}

// With W* fixed, the law drives the compensation mismatch along e_c^T J down.
// The scalar instance below is checked against a brute-force line search over dt.
TEST(UpdateWeights, LocalDescentOfCompensationMismatch) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const RbfBasisConfig cfg;
  for (int n = 0; n < 50; ++n) {
    const BasisRows h = basis_eval(random_chi(rng), cfg);
    const Mat32 jac = input_jacobian(Vec3(0, 0, 3 * uni(rng)), Vec2(1.0 + 0.4 * uni(rng), 0.5 * uni(rng)), 0.2);
    const Vec2 gamma(0.8, 0.1);
    NetworkWeights w_star{Eigen::MatrixXd::Zero(cfg.centers(), 2)};
    w_star.w.col(0).setConstant(0.3 + 0.2 * uni(rng));
    NetworkWeights w = NetworkWeights::zeros(cfg.centers());
    // e_c proportional to the compensation error J (du_hat - du): the sign the law assumes.
    auto mismatch = [&](const NetworkWeights& cand) -> Vec2 {
      return estimate_uncertainty(cand, h, gamma) - estimate_uncertainty(w_star, h, gamma);
    };
    const Vec3 e_c = jac * mismatch(w);
    auto objective = [&](const NetworkWeights& cand) -> double {
      return e_c.dot(jac * mismatch(cand));
    };
    const double before = objective(w);
    ASSERT_GT(before, 0.0);
    // Brute-force search for the largest dt that still decreases the objective.
    double threshold = 0.0;
    for (double dt = 1e-4; dt < 10.0; dt *= 1.5) {
      if (objective(update_weights(w, e_c, jac, h, gamma, dt, 0.0)) < before) threshold = dt;
      else break;
    }
    EXPECT_GT(threshold, 0.0);
    EXPECT_LT(objective(update_weights(w, e_c, jac, h, gamma, 0.01, 0.0)), before);
  }
}

TEST(InputNormalizer, RunningMaxScaling) {
  InputNormalizer norm;
  const Vec4 a = norm.apply(Vec4(0.04, 0.0, 0.0, 0.0));
  EXPECT_DOUBLE_EQ(a(0), 1.0);
  const Vec4 b = norm.apply(Vec4(-0.02, 0.0, 0.0, 0.0));
  EXPECT_DOUBLE_EQ(b(0), -0.5);
  EXPECT_DOUBLE_EQ(b(1), 0.0);
}

TEST(InputNormalizer, FloorKeepsTinyInputsSmall) {
  InputNormalizer norm;
  const Vec4 a = norm.apply(Vec4(1e-5, -1e-4, 0.0, 5e-4));
  EXPECT_NEAR(a(0), 0.01, 1e-12);
  EXPECT_NEAR(a(1), -0.1, 1e-12);
  EXPECT_NEAR(a(3), 0.5, 1e-12);
}

TEST(InputNormalizer, WindowForgetsOldPeaks) {
  InputNormalizer norm{Vec4::Zero(), 1e-3, 2, {}};
  norm.apply(Vec4(1.0, 0, 0, 0));
  norm.apply(Vec4(0.1, 0, 0, 0));
  const Vec4 c = norm.apply(Vec4(0.05, 0, 0, 0));
  EXPECT_DOUBLE_EQ(c(0), 0.5);
}

CyclePrediction straight_prediction() {
  CyclePrediction p;
  p.start = RobotState{0, 0, 0};
  p.predicted = RobotState{0.10, 0, 0};
  p.next_command = CommandInput{1.0, 0.1};
  return p;
}

TEST(BuildInput, PerfectPredictionGivesZero) {
  const CyclePrediction p = straight_prediction();
  InputNormalizer norm;
  const Vec4 chi = build_input(p.predicted, p.next_command, &p, norm);
  EXPECT_EQ(chi, Vec4::Zero());
}

TEST(BuildInput, ShortTravelIsNegative) {
  const CyclePrediction p = straight_prediction();
  InputNormalizer norm;
  norm.running_max(0) = 0.04;
  const Vec4 chi = build_input(RobotState{0.08, 0, 0}, p.next_command, &p, norm);
  EXPECT_NEAR(chi(0), -0.5, 1e-12);
}

TEST(BuildInput, HeadingDeltaIsWrapped) {
  CyclePrediction p = straight_prediction();
  p.predicted.yaw = 0.3;
  const Vec4 d = input_deltas(RobotState{0.10, 0, 0.3 + 2 * kPi}, p.next_command, p);
  EXPECT_NEAR(d(2), 0.0, 1e-12);
}

TEST(BuildInput, PreviousEstimateIsAddedBack) {
  CyclePrediction p = straight_prediction();
  p.estimate = Vec2(0.2, 0.01);
  const Vec4 d = input_deltas(p.predicted, CommandInput{0.8, 0.1}, p);
  EXPECT_NEAR(d(1), 0.0, 1e-15);
  EXPECT_NEAR(d(3), 0.01, 1e-15);
}

TEST(BuildInput, FirstCycleIsZero) {
  InputNormalizer norm;
  EXPECT_EQ(build_input(RobotState{1, 2, 3}, CommandInput{1, 0}, nullptr, norm), Vec4::Zero());
}

TEST(BuildInput, ComponentsStayInUnitBox) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 0.3);
  InputNormalizer norm;
  const CyclePrediction p = straight_prediction();
  for (int n = 0; n < 500; ++n) {
    const RobotState pose{0.1 + gauss(rng), gauss(rng), gauss(rng)};
    const Vec4 chi = build_input(pose, CommandInput{1.0 + gauss(rng), gauss(rng)}, &p, norm);
    EXPECT_LE(chi.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(UncertaintyLevel, Examples) {
  const RbfBasisConfig cfg;
  EXPECT_EQ(uncertainty_level(Vec4::Zero(), cfg), Vec2(0, 0));
  EXPECT_DOUBLE_EQ(uncertainty_level(Vec4(1, 1, 0, 0), cfg)(0), 1.0);
  EXPECT_DOUBLE_EQ(uncertainty_level(Vec4(-1, -1, 0, 0), cfg)(0), -1.0);
  EXPECT_DOUBLE_EQ(uncertainty_level(Vec4(0, 0, 0.42, 0.38), cfg)(1), 0.4);
}

TEST(UncertaintyLevel, Antisymmetric) {
  std::mt19937_64 rng(10);
  const RbfBasisConfig cfg;
  for (int n = 0; n < 1000; ++n) {
    const Vec4 chi = random_chi(rng);
    EXPECT_EQ(uncertainty_level(-chi, cfg), -uncertainty_level(chi, cfg));
  }
}

TEST(UncertaintyLevel, InUnitInterval) {
  std::mt19937_64 rng(12);
  const RbfBasisConfig cfg;
  for (int n = 0; n < 200; ++n)
    EXPECT_LE(uncertainty_level(random_chi(rng), cfg).cwiseAbs().maxCoeff(), 1.0);
}

TEST(StepSize, DefaultParameterExamples) {
  const StepSizeParams p;
  const Vec2 floor = step_size_for(Vec2(0, 0), p);
  EXPECT_DOUBLE_EQ(floor(0), 0.3);
  EXPECT_DOUBLE_EQ(floor(1), 0.06);
  const Vec2 cap = step_size_for(Vec2(1, 1), p);
  EXPECT_DOUBLE_EQ(cap(0), 1.5);
  EXPECT_DOUBLE_EQ(cap(1), 0.15);
  EXPECT_NEAR(step_size_for(Vec2(-0.3, 0), p)(0), 1.02, 1e-12);
}

TEST(StepSize, InitialStateSitsAtFloor) {
  const StepSizeState s = StepSizeState::initial(StepSizeParams{}, 10);
  EXPECT_EQ(s.gamma, Vec2(0.3, 0.06));
  EXPECT_TRUE(s.buffer.empty());
}

TEST(StepSize, StaysInsideBoundsForAnySequence) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> level(-5, 5);
  StepSizeState s = StepSizeState::initial(StepSizeParams{}, 10);
  for (int n = 0; n < 5000; ++n) {
    s = update_step_size(std::move(s), Vec2(level(rng) / 5.0, level(rng) / 5.0));
    ASSERT_GE(s.gamma(0), 0.3);
    ASSERT_LE(s.gamma(0), 1.5);
    ASSERT_GE(s.gamma(1), 0.06);
    ASSERT_LE(s.gamma(1), 0.15);
    ASSERT_LE(s.buffer.size(), 10u);
  }
}

TEST(StepSize, MonotoneInMagnitude) {
  const StepSizeParams p;
  for (double a = 0.0; a <= 1.0; a += 0.05) {
    for (double b = a; b <= 1.0; b += 0.05) {
      const Vec2 ga = step_size_for(Vec2(a, -a), p);
      const Vec2 gb = step_size_for(Vec2(-b, b), p);
      EXPECT_LE(ga(0), gb(0));
      EXPECT_LE(ga(1), gb(1));
    }
  }
}

TEST(StepSize, BufferKeepsNewestEntries) {
  const std::size_t l = 10;
  StepSizeState s = StepSizeState::initial(StepSizeParams{}, l);
  for (std::size_t k = 0; k < l + 5; ++k)
    s = update_step_size(std::move(s), Vec2(static_cast<double>(k) / 20.0, 0.0));
  ASSERT_EQ(s.buffer.size(), l);
  double expect = 0.0;
  for (std::size_t k = 5; k < l + 5; ++k) expect += static_cast<double>(k) / 20.0;
  expect /= static_cast<double>(l);
  EXPECT_NEAR(s.mean()(0), expect, 1e-15);
  EXPECT_NEAR(s.gamma(0), std::min(8.0 * expect * expect + 0.3, 1.5), 1e-15);
}

}  // namespace
}  // namespace vanmpc
