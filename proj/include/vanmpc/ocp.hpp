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

// Tracking optimal control problem with the compensated prediction model
// and a control-Lyapunov inequality on the first input, transcribed by
// direct multiple shooting and solved with a Gauss-Newton SQP.
//
//   min  sum_{i=0..N} |x_i - xr_i|_Q^2 + sum_{i<N} |u_i - du - ur_i|_R^2 + w s
//   s.t. x_{i+1} = RK4(x_i, u_i, du)        (shooting gaps)
//        x_0 = x_k
//        x_min <= x_i <= x_max              (optional)
//        u_min + du <= u_i <= u_max + du
//        H_clf(u_0) + s >= 0,  s >= 0
//
// The QP subproblem is condensed onto (du_0..du_{N-1}, s); shooting states
// are recovered from the linearized gap recursion after each step.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanmpc/kinematics.hpp"
#include "vanmpc/qp.hpp"
#include "vanmpc/trajectories.hpp"

namespace vanmpc {

struct OcpConfig {
  int horizon = 20;
  double dt = 0.1;
  Vec3 q_diag{10.0, 10.0, 1.0};
  Vec2 r_diag{5.0, 5.0};
  Vec3 k_diag{1.0, 1.0, 1.0};
  bool state_box_enabled = false;
  Vec3 x_min = Vec3::Constant(-std::numeric_limits<double>::infinity());
  Vec3 x_max = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec2 u_min{-1.5, -0.6};
  Vec2 u_max{1.5, 0.6};
  bool clf_enabled = true;
  double clf_slack_weight = 1e4;
  int max_iterations = 50;
  double kkt_tolerance = 1e-6;
  double wheel_radius = 0.2;

  void validate() const {
    if (horizon < 2) throw std::invalid_argument("planner.horizon must be >= 2");
    if (!(dt > 0.0)) throw std::invalid_argument("planner.dt must be > 0");
    if ((q_diag.array() < 0.0).any()) throw std::invalid_argument("planner.q_diag must be >= 0");
    if (!(r_diag.array() > 0.0).all()) throw std::invalid_argument("planner.r_diag must be > 0");
    if (!(k_diag.array() > 0.0).all()) throw std::invalid_argument("planner.k_diag must be > 0");
    if (!(u_min.array() < u_max.array()).all())
      throw std::invalid_argument("planner input box must satisfy u_min < u_max");
    if (!(u_max(1) < 0.5 * kPi && u_min(1) > -0.5 * kPi))
      throw std::invalid_argument("planner roll bounds must lie inside (-pi/2, pi/2)");
    if (state_box_enabled && !(x_min.array() <= x_max.array()).all())
      throw std::invalid_argument("planner state box must satisfy x_min <= x_max");
    if (!(clf_slack_weight > 0.0)) throw std::invalid_argument("planner.clf_slack_weight must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("planner.max_iterations must be >= 1");
    if (!(wheel_radius > 0.0)) throw std::invalid_argument("planner.wheel_radius must be > 0");
  }
};

struct OcpProblem {
  Vec3 x0 = Vec3::Zero();          // measured state x_k
  Vec2 u0 = Vec2::Zero();          // measured input u_k
  std::vector<Vec3> x_ref;         // N+1
  std::vector<Vec2> u_ref;         // N
  Vec2 du_hat = Vec2::Zero();      // current compensation estimate
  Mat32 jac = Mat32::Zero();       // df/du at (x_k, u_k)
  ErrorTriple errors;
  Vec3 xdot_prev_pred = Vec3::Zero();  // predicted derivative x'(1|k-1)
  Vec3 xdot_ref = Vec3::Zero();        // reference derivative at k

  /// Fills the reference windows from N+1 samples.
  void set_reference(const std::vector<ReferenceSample>& window) {
    x_ref.clear();
    u_ref.clear();
    for (std::size_t i = 0; i < window.size(); ++i) {
      x_ref.push_back(window[i].state.vec());
      if (i + 1 < window.size()) u_ref.push_back(window[i].input.vec());
    }
    if (!window.empty()) xdot_ref = window.front().derivative;
  }

  void validate(const OcpConfig& cfg) const {
    if (static_cast<int>(x_ref.size()) != cfg.horizon + 1 ||
        static_cast<int>(u_ref.size()) != cfg.horizon)
      throw std::invalid_argument("reference windows must have N+1 states and N inputs");
    for (const auto& x : x_ref)
      if (!x.allFinite()) throw std::invalid_argument("non-finite reference state");
    for (const auto& u : u_ref)
      if (!u.allFinite()) throw std::invalid_argument("non-finite reference input");
    if (!x0.allFinite() || !u0.allFinite() || !du_hat.allFinite())
      throw std::invalid_argument("non-finite initial state, input or estimate");
  }
};

enum class SolverStatus { converged, max_iterations, infeasible_boxes };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iterations: return "max_iterations";
    case SolverStatus::infeasible_boxes: return "infeasible_boxes";
  }
  return "unknown";
}

struct OcpSolution {
  std::vector<Vec3> x;  // N+1 shooting states
  std::vector<Vec2> u;  // N inputs
  double slack = 0.0;
  double objective = 0.0;
  SolverStatus status = SolverStatus::converged;
  int iterations = 0;
  double kkt_residual = 0.0;
  double clf_value = 0.0;  // H_clf at u(0|k)
  double max_gap = 0.0;
};

/// Shifted input box of the compensated problem.
inline std::pair<Vec2, Vec2> shifted_input_box(const OcpConfig& cfg, const Vec2& du) {
  constexpr double kRollMargin = 1e-3;
  Vec2 lo = cfg.u_min + du;
  Vec2 hi = cfg.u_max + du;
  lo(1) = std::max(lo(1), -0.5 * kPi + kRollMargin);
  hi(1) = std::min(hi(1), 0.5 * kPi - kRollMargin);
  return {lo, hi};
}

/// Predicted derivative of the compensated model at the first input.
inline Vec3 clf_bracket(const OcpProblem& p, const Vec2& u0, double wheel_radius) {
  return nominal_derivative(p.x0, u0, wheel_radius) - p.jac * p.du_hat;
}

/// Q(E_c) = 1/2 E_c^T K E_c.
inline double lyapunov_rate_bound(const Vec3& e_c, const Vec3& k_diag) {
  return 0.5 * e_c.dot(k_diag.cwiseProduct(e_c));
}

/// Error part of the Lyapunov-like function (the weight-error trace needs the
/// unknown ideal weights and is not included).
inline double lyapunov_value(const ErrorTriple& e) {
  return 0.5 * e.gamma * e.e_e.squaredNorm() + 0.5 * (1.0 - e.gamma) * e.e_r.squaredNorm();
}

/// Time derivative of the Lyapunov-like function once the adaptive law cancels
/// the weight-error terms:
///   V' = E_c^T [f(x,u0) - J Gamma d2m(h W)] - gamma E_e^T x'_[-1] - (1-gamma) E_r^T x'_ref
inline double lyapunov_derivative(const OcpProblem& p, const Vec2& u0, double wheel_radius) {
  const auto& e = p.errors;
  return e.e_c.dot(clf_bracket(p, u0, wheel_radius)) - e.gamma * e.e_e.dot(p.xdot_prev_pred) -
         (1.0 - e.gamma) * e.e_r.dot(p.xdot_ref);
}

/// H_clf(u0) = -V'(u0) - Q(E_c); the decrement V' <= -Q holds iff H_clf >= 0.
inline double clf_constraint_value(const OcpProblem& p, const Vec2& u0, const OcpConfig& cfg) {
  return -lyapunov_derivative(p, u0, cfg.wheel_radius) -
         lyapunov_rate_bound(p.errors.e_c, cfg.k_diag);
}

/// d H_clf / d u0.
inline Vec2 clf_constraint_gradient(const OcpProblem& p, const Vec2& u0, const OcpConfig& cfg) {
  return -(input_jacobian(p.x0, u0, cfg.wheel_radius).transpose() * p.errors.e_c);
}

/// -d^2 H_clf / d u0^2 per unit multiplier; only the roll channel bends.
inline Mat2 clf_lagrangian_curvature(const OcpProblem& p, const Vec2& u0, const OcpConfig& cfg) {
  const double sec2 = 1.0 / (std::cos(u0(1)) * std::cos(u0(1)));
  const double w = p.errors.e_c(2) / cfg.wheel_radius;
  Mat2 m;
  m << 0.0, w * sec2, w * sec2, 2.0 * w * u0(0) * sec2 * std::tan(u0(1));
  return m;
}

/// Objective of a candidate trajectory (slack term excluded).
inline double tracking_cost(const OcpProblem& p, const OcpConfig& cfg,
                            const std::vector<Vec3>& x, const std::vector<Vec2>& u) {
  double j = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vec3 e = state_error(x[i], p.x_ref[i]);
    j += e.dot(cfg.q_diag.cwiseProduct(e));
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vec2 e = u[i] - p.du_hat - p.u_ref[i];
    j += e.dot(cfg.r_diag.cwiseProduct(e));
  }
  return j;
}

/// One RK4 step of the compensated prediction model.
inline Vec3 discretize_dynamics(const Vec3& x, const Vec2& u, const Vec2& du, double dt,
                                double wheel_radius) {
  return rk4_step(x, u, du, dt, wheel_radius);
}

namespace detail {

struct SqpIterate {
  std::vector<Vec3> x;
  std::vector<Vec2> u;
  double s = 0.0;
};

inline std::vector<Vec3> rollout(const Vec3& x0, const std::vector<Vec2>& u, const Vec2& du,
                                 double dt, double r) {
  std::vector<Vec3> x{x0};
  x.reserve(u.size() + 1);
  for (const auto& ui : u) x.push_back(rk4_step(x.back(), ui, du, dt, r));
  return x;
}

}  // namespace detail

/// Solves the tracking OCP. `warm_start` is shifted by one step.
inline OcpSolution solve_ocp(const OcpProblem& p, const OcpConfig& cfg,
                             const OcpSolution* warm_start = nullptr) {
  cfg.validate();
  p.validate(cfg);
  const int n_steps = cfg.horizon;
  const double r = cfg.wheel_radius;
  const auto [u_lo, u_hi] = shifted_input_box(cfg, p.du_hat);
  auto clamp_u = [&](const Vec2& u) { return Vec2(u.cwiseMax(u_lo).cwiseMin(u_hi)); };

  OcpSolution sol;
  if (cfg.state_box_enabled) {
    constexpr double kBoxTol = 1e-9;
    if (((p.x0 - cfg.x_min).array() < -kBoxTol).any() ||
        ((p.x0 - cfg.x_max).array() > kBoxTol).any()) {
      sol.status = SolverStatus::infeasible_boxes;
      sol.u.assign(static_cast<std::size_t>(n_steps), clamp_u(p.u_ref.front() + p.du_hat));
      sol.x = detail::rollout(p.x0, sol.u, p.du_hat, cfg.dt, r);
      sol.objective = tracking_cost(p, cfg, sol.x, sol.u);
      return sol;
    }
  }

  // Initial guess.
  detail::SqpIterate it;
  if (warm_start != nullptr && static_cast<int>(warm_start->u.size()) == n_steps) {
    for (int i = 0; i < n_steps; ++i)
      it.u.push_back(clamp_u(warm_start->u[static_cast<std::size_t>(std::min(i + 1, n_steps - 1))]));
    it.x.push_back(p.x0);
    for (int i = 1; i < n_steps; ++i) it.x.push_back(warm_start->x[static_cast<std::size_t>(i + 1)]);
    it.x.push_back(rk4_step(it.x.back(), it.u.back(), p.du_hat, cfg.dt, r));
  } else {
    for (int i = 0; i < n_steps; ++i)
      it.u.push_back(clamp_u(p.u_ref[static_cast<std::size_t>(i)] + p.du_hat));
    it.x = detail::rollout(p.x0, it.u, p.du_hat, cfg.dt, r);
  }

  const bool use_clf = cfg.clf_enabled;
  if (use_clf) it.s = std::max(0.0, -clf_constraint_value(p, it.u[0], cfg));

  const int nu = 2 * n_steps;
  const int nz = nu + (use_clf ? 1 : 0);
  const int nx = 3 * n_steps;
  const Eigen::VectorXd qbar = cfg.q_diag.replicate(n_steps, 1);
  double mu = 10.0;      // penalty on shooting gaps
  double mu_clf = 10.0;  // penalty on the softened CLF inequality
  double clf_multiplier = 0.0;
  constexpr double kSlackProximal = 1.0;

  auto gaps_of = [&](const detail::SqpIterate& s) {
    std::vector<Vec3> g(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      g[iu] = state_error(rk4_step(s.x[iu], s.u[iu], p.du_hat, cfg.dt, r), s.x[iu + 1]);
    }
    return g;
  };
  auto infeasibility = [&](const detail::SqpIterate& s, const std::vector<Vec3>& g) {
    double v = 0.0;
    for (const auto& gi : g) v += mu * gi.lpNorm<1>();
    if (use_clf) v += mu_clf * std::max(0.0, -(clf_constraint_value(p, s.u[0], cfg) + s.s));
    return v;
  };
  auto merit = [&](const detail::SqpIterate& s) {
    const auto g = gaps_of(s);
    return tracking_cost(p, cfg, s.x, s.u) + (use_clf ? cfg.clf_slack_weight * s.s : 0.0) +
           infeasibility(s, g);
  };

  Eigen::MatrixXd sens(nx, nu);  // d dx_{1..N} / d du
  Eigen::VectorXd drift(nx);     // dx_{1..N} at du = 0
  std::vector<Mat3> a_mats(static_cast<std::size_t>(n_steps));
  std::vector<Mat32> b_mats(static_cast<std::size_t>(n_steps));

  sol.status = SolverStatus::max_iterations;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    sol.iterations = iter;

    // Linearize the shooting constraints.
    std::vector<Vec3> gaps(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const auto lin = rk4_step_linearized(it.x[iu], it.u[iu], p.du_hat, cfg.dt, r);
      a_mats[iu] = lin.a;
      b_mats[iu] = lin.b;
      gaps[iu] = state_error(lin.next, it.x[iu + 1]);
    }

    // Condense: dx_{i+1} = A_i dx_i + B_i du_i + gap_i, dx_0 = 0.
    sens.setZero();
    drift.setZero();
    for (int i = 0; i < n_steps; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const int row = 3 * i;
      if (i > 0) {
        sens.block(row, 0, 3, 2 * i) = a_mats[iu] * sens.block(row - 3, 0, 3, 2 * i);
        drift.segment<3>(row) = a_mats[iu] * drift.segment<3>(row - 3);
      }
      sens.block(row, 2 * i, 3, 2) = b_mats[iu];
      drift.segment<3>(row) += gaps[iu];
    }

    Eigen::VectorXd ex(nx);
    for (int i = 0; i < n_steps; ++i) {
      const auto iu = static_cast<std::size_t>(i + 1);
      ex.segment<3>(3 * i) = state_error(it.x[iu], p.x_ref[iu]);
    }
    Eigen::VectorXd eu(nu);
    for (int i = 0; i < n_steps; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      eu.segment<2>(2 * i) = it.u[iu] - p.du_hat - p.u_ref[iu];
    }
    const Eigen::VectorXd rbar = cfg.r_diag.replicate(n_steps, 1);

    QpProblem qp;
    qp.hessian = Eigen::MatrixXd::Zero(nz, nz);
    qp.hessian.topLeftCorner(nu, nu) = 2.0 * sens.transpose() * qbar.asDiagonal() * sens;
    qp.hessian.topLeftCorner(nu, nu).diagonal() += 2.0 * rbar;
    qp.gradient = Eigen::VectorXd::Zero(nz);
    qp.gradient.head(nu) = 2.0 * sens.transpose() * qbar.cwiseProduct(ex + drift) +
                           2.0 * rbar.cwiseProduct(eu);
    qp.lower = Eigen::VectorXd(nz);
    qp.upper = Eigen::VectorXd(nz);
    for (int i = 0; i < n_steps; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      qp.lower.segment<2>(2 * i) = u_lo - it.u[iu];
      qp.upper.segment<2>(2 * i) = u_hi - it.u[iu];
    }

    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    if (use_clf) {
      const Vec2 dh = clf_constraint_gradient(p, it.u[0], cfg);
      // Slack enters with a small proximal term and an upper bound large enough
      // to satisfy the linearized constraint anywhere in the input box.
      qp.hessian(nu, nu) = kSlackProximal;
      qp.gradient(nu) = cfg.clf_slack_weight - kSlackProximal * it.s;
      qp.lower(nu) = 0.0;
      qp.upper(nu) = std::max(0.0, -clf_constraint_value(p, it.u[0], cfg)) +
                     dh.cwiseAbs().dot(u_hi - u_lo) + 1.0;
      // Positive part of the constraint curvature weighted by its multiplier.
      if (clf_multiplier > 0.0) {
        const Mat2 curv = clf_multiplier * clf_lagrangian_curvature(p, it.u[0], cfg);
        const Eigen::SelfAdjointEigenSolver<Mat2> es(curv);
        const Vec2 ev = es.eigenvalues().cwiseMax(0.0);
        qp.hessian.topLeftCorner<2, 2>() += es.eigenvectors() * ev.asDiagonal() *
                                            es.eigenvectors().transpose();
      }
      // H(u0) + dH du0 + s_new >= 0
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nz);
      row(0) = -dh(0);
      row(1) = -dh(1);
      row(nu) = -1.0;
      rows.push_back(row);
      rhs.push_back(clf_constraint_value(p, it.u[0], cfg));
    }
    if (cfg.state_box_enabled) {
      for (int i = 0; i < n_steps; ++i) {
        const auto iu = static_cast<std::size_t>(i + 1);
        for (int d = 0; d < 3; ++d) {
          const int r_idx = 3 * i + d;
          Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nz);
          row.head(nu) = sens.row(r_idx);
          const double base = it.x[iu](d) + drift(r_idx);
          if (std::isfinite(cfg.x_max(d))) {
            rows.push_back(row);
            rhs.push_back(cfg.x_max(d) - base);
          }
          if (std::isfinite(cfg.x_min(d))) {
            rows.push_back(-row);
            rhs.push_back(base - cfg.x_min(d));
          }
        }
      }
    }
    qp.a_ineq = Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), nz);
    qp.b_ineq = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      qp.a_ineq.row(static_cast<Eigen::Index>(k)) = rows[k];
      qp.b_ineq(static_cast<Eigen::Index>(k)) = rhs[k];
    }

    const QpResult qr = solve_qp(qp, QpOptions{100, 1e-13});
    const Eigen::VectorXd du_step = qr.x.head(nu);
    const double s_new = use_clf ? std::max(0.0, qr.x(nu)) : 0.0;
    if (use_clf && qr.lambda_ineq.size() > 0) clf_multiplier = qr.lambda_ineq(0);
    const Eigen::VectorXd dx_step = sens * du_step + drift;

    double gap_norm = 0.0;
    for (const auto& g : gaps) gap_norm = std::max(gap_norm, g.lpNorm<Eigen::Infinity>());
    const double clf_viol =
        use_clf ? std::max(0.0, -(clf_constraint_value(p, it.u[0], cfg) + it.s)) : 0.0;
    sol.kkt_residual = std::max({du_step.lpNorm<Eigen::Infinity>(),
                                 dx_step.lpNorm<Eigen::Infinity>(), std::abs(s_new - it.s),
                                 gap_norm, clf_viol});
    if (sol.kkt_residual < cfg.kkt_tolerance) {
      sol.status = SolverStatus::converged;
      break;
    }

    // Penalty parameter from the QP multipliers (dynamics adjoint + CLF dual).
    {
      Eigen::VectorXd ex_new = ex + dx_step;
      Vec3 lambda = 2.0 * cfg.q_diag.cwiseProduct(ex_new.segment<3>(3 * (n_steps - 1)));
      double lam_max = lambda.lpNorm<Eigen::Infinity>();
      for (int i = n_steps - 1; i >= 1; --i) {
        lambda = 2.0 * cfg.q_diag.cwiseProduct(ex_new.segment<3>(3 * (i - 1))) +
                 a_mats[static_cast<std::size_t>(i)].transpose() * lambda;
        lam_max = std::max(lam_max, lambda.lpNorm<Eigen::Infinity>());
      }
      mu = std::max(mu, 1.1 * lam_max + 1.0);
      if (use_clf) mu_clf = std::max(mu_clf, 1.1 * clf_multiplier + 1.0);
    }

    // Armijo backtracking on the L1 merit function.
    double dcost = 2.0 * ex.dot(qbar.cwiseProduct(dx_step)) + 2.0 * eu.dot(rbar.cwiseProduct(du_step));
    if (use_clf) dcost += cfg.clf_slack_weight * (s_new - it.s);
    const double phi0 = merit(it);
    const double dir = dcost - infeasibility(it, gaps);

    auto trial = [&](double alpha) {
      detail::SqpIterate t = it;
      for (int i = 0; i < n_steps; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        t.u[iu] = clamp_u(it.u[iu] + alpha * du_step.segment<2>(2 * i));
        Vec3 xn = it.x[iu + 1] + alpha * dx_step.segment<3>(3 * i);
        xn(2) = wrap_angle(xn(2));
        t.x[iu + 1] = xn;
      }
      t.s = it.s + alpha * (s_new - it.s);
      return t;
    };

    double alpha = 1.0;
    detail::SqpIterate cand = trial(alpha);
    double phi = merit(cand);
    // Allow for roundoff in the merit value once steps become tiny.
    const double noise = 1e-12 * (1.0 + std::abs(phi0));
    while (phi > phi0 + 1e-4 * alpha * std::min(dir, 0.0) + noise && alpha > 1e-6) {
      alpha *= 0.5;
      cand = trial(alpha);
      phi = merit(cand);
    }
    if (phi <= phi0 || alpha > 1e-6) it = std::move(cand);
  }

  sol.x = it.x;
  sol.u = it.u;
  sol.slack = it.s;
  sol.objective = tracking_cost(p, cfg, it.x, it.u) + (use_clf ? cfg.clf_slack_weight * it.s : 0.0);
  sol.clf_value = clf_constraint_value(p, it.u[0], cfg);
  for (const auto& g : gaps_of(it)) sol.max_gap = std::max(sol.max_gap, g.lpNorm<Eigen::Infinity>());
  return sol;
}

}  // namespace vanmpc
