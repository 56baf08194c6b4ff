// Copyright 2026 The pvdyn Authors
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

#include <deque>

#include "pvdyn/constrained/soft.hpp"

namespace pvdyn
{

  namespace detail
  {
    // least_squares is declared when the residual improved by less than this
    // fraction over the last kStallWindow iterations.
    inline constexpr double kStallImprovement = 1e-3;
    inline constexpr int kStallWindow = 5;

    /// Articulated inertias with mu^-1 K^T K added at every constrained link,
    /// factored tip to base.
    inline void augmented_inertia_pass(const Model & model, const ConstraintSet & cs, double mu, ArticulatedSweep & sw)
    {
      reset_inertias(model, sw);
      for (const MotionConstraint & c : cs)
      {
        sw.IA[static_cast<std::size_t>(c.link)].noalias() += (1.0 / mu) * (c.K.transpose() * c.K);
        const auto d = static_cast<std::uint64_t>(c.dim());
        flops::add(flops::gemm(6, d, 6) + 72);
      }
      for (std::size_t i = sw.IA.size(); i-- > 0;)
      {
        factor_joint(model, i, sw);
        propagate_inertia(model, i, sw);
      }
    }
  } // namespace detail

  /// Proximal method of multipliers on top of the articulated-body sweep.
  /// The inertia pass is done once; each iteration reruns only the bias and
  /// acceleration passes. Rank-deficient or contradictory constraints give
  /// the least-squares motion instead of failing.
  inline ConstrainedSolution constrained_aba(const Model & model, const State & state, const VectorX & tau,
                                             const ConstraintSet & cs, const SolverSettings & settings,
                                             PvWorkspace & ws)
  {
    detail::check_inputs(model, state, tau, cs, ws);
    settings.validate(cs.m());
    detail::ArticulatedSweep & sw = ws.sweep;
    forward_kinematics(model, state, sw.kin);
    detail::sweep_targets(model, cs, ws);
    detail::augmented_inertia_pass(model, cs, settings.mu, sw);

    const std::size_t n = static_cast<std::size_t>(model.n_links());
    const SpatialMotion a_world = detail::world_acceleration(model);
    const double mu_inv = 1.0 / settings.mu;
    ws.lambda.setZero();

    ConstrainedSolution sol;
    sol.status = SolveStatus::MaxIter;
    std::deque<double> history;
    const int max_iter = cs.m() == 0 ? 1 : settings.max_iter;
    for (int it = 1; it <= max_iter; ++it)
    {
      detail::reset_bias(model, sw, {});
      for (int c = 0; c < cs.size(); ++c)
      {
        const MotionConstraint & con = cs[c];
        const int off = cs.offset(c);
        sw.pA[static_cast<std::size_t>(con.link)].noalias() -=
          con.K.transpose() * (ws.lambda.segment(off, con.dim()) + mu_inv * ws.b.segment(off, con.dim()));
        const auto d = static_cast<std::uint64_t>(con.dim());
        flops::add(2 * d + flops::gemv(6, d) + 6);
      }
      for (std::size_t i = n; i-- > 0;)
      {
        const Vector6 pa = detail::project_bias(model, i, sw, tau);
        detail::propagate_bias(model, i, sw, pa);
      }
      for (std::size_t i = 0; i < n; ++i)
        detail::forward_link(model, i, sw, a_world);

      double res2 = 0.0;
      for (int c = 0; c < cs.size(); ++c)
      {
        const MotionConstraint & con = cs[c];
        const int off = cs.offset(c);
        const VectorX r = con.K * sw.a[static_cast<std::size_t>(con.link)] - ws.b.segment(off, con.dim());
        ws.lambda.segment(off, con.dim()) -= mu_inv * r;
        res2 += r.squaredNorm();
        const auto d = static_cast<std::uint64_t>(con.dim());
        flops::add(flops::gemv(d, 6) + 5 * d);
      }
      const double res = std::sqrt(res2);
      sol.iterations = it;
      sol.primal_residual = res;
      if (res <= settings.tol_primal)
      {
        sol.status = SolveStatus::Converged;
        break;
      }
      history.push_back(res);
      if (static_cast<int>(history.size()) > detail::kStallWindow)
      {
        const double past = history.front();
        history.pop_front();
        if (past - res < detail::kStallImprovement * past)
        {
          sol.status = SolveStatus::LeastSquares;
          break;
        }
      }
    }
    if (cs.m() == 0)
      sol.status = SolveStatus::Converged;
    sol.qdd = sw.qdd;
    sol.lambda = ws.lambda;
    return sol;
  }

} // namespace pvdyn
