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

// Small dense convex QP
//
//   min  1/2 x^T H x + g^T x
//   s.t. lb <= x <= ub,  A x <= b
//
// solved with a Mehrotra predictor-corrector primal-dual interior point
// method. Infinite bounds are dropped. H must be positive semidefinite and
// H + G^T W G positive definite for every positive diagonal W, which holds
// whenever each variable with zero curvature is bounded.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace vanmpc {

struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  Eigen::VectorXd lower;  // may hold -inf
  Eigen::VectorXd upper;  // may hold +inf
  Eigen::MatrixXd a_ineq; // rows x n, may be empty
  Eigen::VectorXd b_ineq;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda_lower;  // multipliers of lb <= x (>= 0)
  Eigen::VectorXd lambda_upper;  // multipliers of x <= ub (>= 0)
  Eigen::VectorXd lambda_ineq;   // multipliers of A x <= b (>= 0)
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

struct QpOptions {
  int max_iterations = 60;
  double tolerance = 1e-10;
};

namespace detail {

struct QpRow {
  enum class Kind { lower, upper, general } kind;
  int index;  // variable index for bounds, row index for general
};

}  // namespace detail

inline QpResult solve_qp(const QpProblem& qp, const QpOptions& opt = {}) {
  const Eigen::Index n = qp.gradient.size();
  const double inf = std::numeric_limits<double>::infinity();

  // Collect G x <= h. Bound rows are kept implicit to avoid dense products.
  std::vector<detail::QpRow> rows;
  std::vector<double> h;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (qp.lower.size() == n && qp.lower(i) > -inf) {
      rows.push_back({detail::QpRow::Kind::lower, static_cast<int>(i)});
      h.push_back(-qp.lower(i));
    }
    if (qp.upper.size() == n && qp.upper(i) < inf) {
      rows.push_back({detail::QpRow::Kind::upper, static_cast<int>(i)});
      h.push_back(qp.upper(i));
    }
  }
  for (Eigen::Index r = 0; r < qp.a_ineq.rows(); ++r) {
    rows.push_back({detail::QpRow::Kind::general, static_cast<int>(r)});
    h.push_back(qp.b_ineq(r));
  }
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());

  auto g_times = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(m);
    Eigen::VectorXd ax;
    if (qp.a_ineq.rows() > 0) ax = qp.a_ineq * x;
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      switch (row.kind) {
        case detail::QpRow::Kind::lower: out(r) = -x(row.index); break;
        case detail::QpRow::Kind::upper: out(r) = x(row.index); break;
        case detail::QpRow::Kind::general: out(r) = ax(row.index); break;
      }
    }
    return out;
  };
  auto gt_times = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd yg = Eigen::VectorXd::Zero(qp.a_ineq.rows());
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      switch (row.kind) {
        case detail::QpRow::Kind::lower: out(row.index) -= y(r); break;
        case detail::QpRow::Kind::upper: out(row.index) += y(r); break;
        case detail::QpRow::Kind::general: yg(row.index) = y(r); break;
      }
    }
    if (qp.a_ineq.rows() > 0) out += qp.a_ineq.transpose() * yg;
    return out;
  };
  // H + G^T diag(w) G
  auto reduced_matrix = [&](const Eigen::VectorXd& w) {
    Eigen::MatrixXd k = qp.hessian;
    Eigen::VectorXd wg = Eigen::VectorXd::Zero(qp.a_ineq.rows());
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (row.kind == detail::QpRow::Kind::general)
        wg(row.index) = w(r);
      else
        k(row.index, row.index) += w(r);
    }
    if (qp.a_ineq.rows() > 0) k.noalias() += qp.a_ineq.transpose() * wg.asDiagonal() * qp.a_ineq;
    return k;
  };

  const Eigen::VectorXd hv = Eigen::Map<const Eigen::VectorXd>(h.data(), m);
  QpResult res;

  if (m == 0) {
    res.x = qp.hessian.ldlt().solve(-qp.gradient);
    res.converged = true;
  } else {
    // Start at the projection of the unconstrained-ish point into the box interior.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lo = qp.lower.size() == n ? qp.lower(i) : -inf;
      const double hi = qp.upper.size() == n ? qp.upper(i) : inf;
      if (lo > -inf && hi < inf)
        x(i) = 0.5 * (lo + hi);
      else if (lo > -inf)
        x(i) = lo + 1.0;
      else if (hi < inf)
        x(i) = hi - 1.0;
    }
    Eigen::VectorXd s = (hv - g_times(x)).cwiseMax(1.0);
    Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
    const double scale = 1.0 + std::max(qp.gradient.lpNorm<Eigen::Infinity>(),
                                        hv.lpNorm<Eigen::Infinity>());

    for (int it = 0; it < opt.max_iterations; ++it) {
      res.iterations = it + 1;
      const Eigen::VectorXd rd = qp.hessian * x + qp.gradient + gt_times(z);
      const Eigen::VectorXd rp = g_times(x) + s - hv;
      const double mu = s.dot(z) / static_cast<double>(m);
      res.residual = std::max({rd.lpNorm<Eigen::Infinity>(), rp.lpNorm<Eigen::Infinity>(), mu});
      if (res.residual < opt.tolerance * scale) {
        res.converged = true;
        break;
      }

      const Eigen::VectorXd w = z.cwiseQuotient(s);
      const Eigen::LLT<Eigen::MatrixXd> llt(reduced_matrix(w));

      // Solves the Newton system for complementarity target rc = S Z e - sigma mu e (+ corr).
      auto newton = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& ds,
                        Eigen::VectorXd& dz) {
        const Eigen::VectorXd t = (rc - z.cwiseProduct(rp)).cwiseQuotient(s);
        dx = llt.solve(-rd + gt_times(t));
        ds = -rp - g_times(dx);
        dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(s);
      };
      auto max_step = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
        double a = 1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
          if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
        return a;
      };

      Eigen::VectorXd dx, ds, dz;
      newton(s.cwiseProduct(z), dx, ds, dz);
      const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
      const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
      const double sigma = std::pow(mu_aff / mu, 3.0);

      const Eigen::VectorXd rc =
          s.cwiseProduct(z) + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(m, sigma * mu);
      newton(rc, dx, ds, dz);
      double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz)));
      const double mu_next = (s + alpha * ds).dot(z + alpha * dz) / static_cast<double>(m);
      if (mu_next > (1.0 - 0.01 * alpha) * mu) {
        // Corrector made things worse: fall back to a plain centering step.
        const double sigma_c = std::max(sigma, 0.1);
        newton(s.cwiseProduct(z) - Eigen::VectorXd::Constant(m, sigma_c * mu), dx, ds, dz);
        alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz)));
      }
      x += alpha * dx;
      s += alpha * ds;
      z += alpha * dz;
    }
    res.x = x;

    res.lambda_lower = Eigen::VectorXd::Zero(n);
    res.lambda_upper = Eigen::VectorXd::Zero(n);
    res.lambda_ineq = Eigen::VectorXd::Zero(qp.a_ineq.rows());
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      switch (row.kind) {
        case detail::QpRow::Kind::lower: res.lambda_lower(row.index) = z(r); break;
        case detail::QpRow::Kind::upper: res.lambda_upper(row.index) = z(r); break;
        case detail::QpRow::Kind::general: res.lambda_ineq(row.index) = z(r); break;
      }
    }
  }
  if (res.lambda_lower.size() == 0) {
    res.lambda_lower = Eigen::VectorXd::Zero(n);
    res.lambda_upper = Eigen::VectorXd::Zero(n);
    res.lambda_ineq = Eigen::VectorXd::Zero(qp.a_ineq.rows());
  }
  return res;
}

}  // namespace vanmpc
