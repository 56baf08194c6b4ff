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

#include "pvdyn/constrained/pv.hpp"

namespace pvdyn
{

  namespace detail
  {
    inline double soft_weight(const SolverSettings & s, int row) { return s.soft_R.size() ? s.soft_R(row) : 1e-6; }

    inline double primal_residual(const ConstraintSet & cs, const PvWorkspace & ws)
    {
      double res2 = 0.0;
      for (int c = 0; c < cs.size(); ++c)
        res2 += (cs[c].K * ws.sweep.a[static_cast<std::size_t>(cs[c].link)]
                 - ws.b.segment(cs.offset(c), cs[c].dim()))
                  .squaredNorm();
      return std::sqrt(res2);
    }
  } // namespace detail

  /// Relaxed constraints: minimises the Gauss function plus
  /// 1/2 |J qdd - (a* - gamma)|^2 weighted by R^-1. Each constraint is absorbed
  /// into its own link's articulated inertia, so the cost stays linear.
  inline ConstrainedSolution pv_soft_solve(const Model & model, const State & state, const VectorX & tau,
                                           const ConstraintSet & cs, const SolverSettings & settings,
                                           PvWorkspace & ws)
  {
    detail::check_inputs(model, state, tau, cs, ws);
    settings.validate(cs.m());
    detail::ArticulatedSweep & sw = ws.sweep;
    forward_kinematics(model, state, sw.kin);
    detail::reset_inertias(model, sw);
    detail::reset_bias(model, sw, {});
    detail::sweep_targets(model, cs, ws);

    for (int c = 0; c < cs.size(); ++c)
    {
      const MotionConstraint & con = cs[c];
      const auto e = static_cast<std::size_t>(con.link);
      const int off = cs.offset(c);
      ConstraintRows RK = con.K;
      for (int r = 0; r < con.dim(); ++r)
        RK.row(r) /= detail::soft_weight(settings, off + r);
      sw.IA[e].noalias() += con.K.transpose() * RK;
      sw.pA[e].noalias() -= RK.transpose() * ws.b.segment(off, con.dim());
      const auto d = static_cast<std::uint64_t>(con.dim());
      flops::add(6 * d + flops::gemm(6, d, 6) + 36 + flops::gemv(6, d) + 6);
    }

    const std::size_t n = static_cast<std::size_t>(model.n_links());
    for (std::size_t i = n; i-- > 0;)
    {
      detail::factor_joint(model, i, sw);
      const Vector6 pa = detail::project_bias(model, i, sw, tau);
      detail::propagate_inertia(model, i, sw);
      detail::propagate_bias(model, i, sw, pa);
    }
    const SpatialMotion a_world = detail::world_acceleration(model);
    for (std::size_t i = 0; i < n; ++i)
      detail::forward_link(model, i, sw, a_world);

    ConstrainedSolution sol;
    sol.qdd = sw.qdd;
    sol.lambda.resize(cs.m());
    for (int c = 0; c < cs.size(); ++c)
    {
      const MotionConstraint & con = cs[c];
      const int off = cs.offset(c);
      sol.lambda.segment(off, con.dim()) =
        ws.b.segment(off, con.dim()) - con.K * ws.sweep.a[static_cast<std::size_t>(con.link)];
      for (int r = 0; r < con.dim(); ++r)
        sol.lambda(off + r) /= detail::soft_weight(settings, off + r);
      flops::add(flops::gemv(static_cast<std::uint64_t>(con.dim()), 6) + 2 * static_cast<std::uint64_t>(con.dim()));
    }
    sol.primal_residual = detail::primal_residual(cs, ws);
    return sol;
  }

} // namespace pvdyn
