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

#include <cmath>

#include "pvdyn/constrained/workspace.hpp"

namespace pvdyn
{

  namespace detail
  {
    // Early elimination accepts a constraint block once its dual block is
    // this well conditioned; anything worse is deferred toward the base.
    inline constexpr double kEarlyRcond = 1e-6;
    // Pivots below this fraction of the largest dual diagonal count as zero.
    inline constexpr double kPivotFloor = 1e-10;
    inline constexpr double kRootRcond = 1e-12;

    inline void check_inputs(const Model & model, const State & state, const VectorX & tau, const ConstraintSet & cs,
                             const PvWorkspace & ws)
    {
      ws.check(model, cs);
      check_state(model, state);
      if (tau.size() != model.nv)
        throw DimensionMismatch("tau has size " + std::to_string(tau.size()) + ", expected "
                                + std::to_string(model.nv));
    }

    /// b_k = a*_k + K_k (gravity offset), the target on the sweep accelerations.
    inline void sweep_targets(const Model & model, const ConstraintSet & cs, PvWorkspace & ws)
    {
      for (int k = 0; k < cs.size(); ++k)
      {
        const MotionConstraint & c = cs[k];
        ws.b.segment(cs.offset(k), c.dim()) =
          c.a_star + c.K * gravity_bias_in_link(model, ws.sweep.kin, c.link).vector();
        flops::add(flops::gemv(static_cast<std::uint64_t>(c.dim()), 6) + static_cast<std::uint64_t>(c.dim()));
      }
    }

    inline void install_rows(const ConstraintSet & cs, PvWorkspace & ws, std::size_t i)
    {
      RowSet & s = ws.sets[i];
      for (int c : ws.constraints_at[i])
      {
        const int k0 = s.size();
        const int d = cs[c].dim();
        for (int r = 0; r < d; ++r)
          s.rows.push_back(cs.offset(c) + r);
        s.Omega.middleRows(k0, d) = cs[c].K;
        s.L.block(0, k0, k0 + d, d).setZero();
        s.L.block(k0, 0, d, k0).setZero();
        s.l.segment(k0, d).setZero();
      }
    }

    inline void merge_rows(const RowSet & src, RowSet & dst)
    {
      const int k0 = dst.size();
      const int k = src.size();
      if (k == 0)
        return;
      dst.rows.insert(dst.rows.end(), src.rows.begin(), src.rows.end());
      dst.Omega.middleRows(k0, k) = src.Omega.topRows(k);
      dst.L.block(0, k0, k0, k).setZero();
      dst.L.block(k0, 0, k, k0).setZero();
      dst.L.block(k0, k0, k, k) = src.L.topLeftCorner(k, k);
      dst.l.segment(k0, k) = src.l.head(k);
    }

    /// Moves the rows of link i across its joint into parent coordinates,
    /// accumulating the joint's contribution to the dual blocks.
    inline void cross_joint(const Model & model, std::size_t i, PvWorkspace & ws, bool with_bias)
    {
      ArticulatedSweep & sw = ws.sweep;
      RowSet & s = ws.sets[i];
      const int k = s.size();
      ws.cross_rows[i].assign(s.rows.begin(), s.rows.end());
      if (k == 0)
        return;
      const int nv = model.joints[i].nv();
      const auto uk = static_cast<std::uint64_t>(k);
      if (nv > 0)
      {
        const auto unv = static_cast<std::uint64_t>(nv);
        auto OS = ws.OS[i].topRows(k);
        OS.noalias() = s.Omega.topRows(k) * sw.S[i];
        auto OSD = ws.scratch.topLeftCorner(k, nv);
        OSD.noalias() = OS * sw.Dinv[i];
        s.L.topLeftCorner(k, k).noalias() += OSD * OS.transpose();
        s.Omega.topRows(k).noalias() -= OSD * sw.U[i].transpose();
        flops::add(flops::gemm(uk, 6, unv) + flops::gemm(uk, unv, unv) + flops::gemm(uk, unv, uk) + uk * uk
                   + flops::gemm(uk, unv, 6) + 6 * uk);
        if (with_bias)
        {
          s.l.head(k).noalias() += OSD * sw.u[i];
          flops::add(flops::gemv(uk, unv) + uk);
        }
      }
      if (with_bias && sw.kin.has_velocity && nv > 0)
      {
        s.l.head(k).noalias() += s.Omega.topRows(k) * sw.kin.c[i].vector();
        flops::add(flops::gemv(uk, 6) + uk);
      }
      rows_times_transform(sw.kin.X_parent[i], s.Omega.topRows(k), s.Omega.topRows(k));
      ws.stats.propagations += uk;
    }

    inline void remove_rows(RowSet & s, int start, int d)
    {
      const int k = s.size();
      for (int r = start; r + d < k; ++r)
      {
        s.Omega.row(r) = s.Omega.row(r + d);
        s.l(r) = s.l(r + d);
        s.L.col(r).head(k) = s.L.col(r + d).head(k);
      }
      for (int r = start; r + d < k; ++r)
        s.L.row(r).head(k - d) = s.L.row(r + d).head(k - d);
      s.rows.erase(s.rows.begin() + start, s.rows.begin() + start + d);
    }

    /// Eliminates every constraint block of link i's rows (already in the
    /// parent's coordinates) whose dual block is invertible, folding it into
    /// the parent's articulated inertia and bias.
    inline void eliminate_early(const Model & model, std::size_t i, PvWorkspace & ws, bool with_bias)
    {
      RowSet & s = ws.sets[i];
      const auto p = static_cast<std::size_t>(model.parents[i]);
      ArticulatedSweep & sw = ws.sweep;
      double scale = 0.0;
      for (int r = 0; r < s.size(); ++r)
        scale = std::max(scale, s.L(r, r));
      int start = 0;
      while (start < s.size())
      {
        const int con = ws.row_constraint[static_cast<std::size_t>(s.rows[static_cast<std::size_t>(start)])];
        int d = 1;
        while (start + d < s.size()
               && ws.row_constraint[static_cast<std::size_t>(s.rows[static_cast<std::size_t>(start + d)])] == con)
          ++d;
        const int k = s.size();
        const auto ud = static_cast<std::uint64_t>(d);
        const auto uk = static_cast<std::uint64_t>(k);
        Eigen::LLT<JointMatrix> llt(s.L.block(start, start, d, d));
        flops::add(flops::cholesky(ud));
        ws.stats.max_dual_dim = std::max(ws.stats.max_dual_dim, d);
        const bool ok = llt.info() == Eigen::Success && llt.rcond() > kEarlyRcond
                        && llt.matrixLLT().diagonal().array().square().minCoeff() > kPivotFloor * scale;
        if (!ok)
        {
          start += d;
          continue;
        }

        EarlyRecord rec;
        rec.rows_C.assign(s.rows.begin() + start, s.rows.begin() + start + d);
        rec.rows_R.reserve(static_cast<std::size_t>(k - d));
        for (int r = 0; r < k; ++r)
          if (r < start || r >= start + d)
            rec.rows_R.push_back(s.rows[static_cast<std::size_t>(r)]);
        rec.Linv = llt.solve(MatrixX::Identity(d, d));
        rec.Omega = s.Omega.middleRows(start, d);
        rec.L_CR.resize(d, k - d);
        rec.L_CR.leftCols(start) = s.L.block(start, 0, d, start);
        rec.L_CR.rightCols(k - start - d) = s.L.block(start, start + d, d, k - start - d);
        rec.rhs.resize(d);
        for (int r = 0; r < d; ++r)
          rec.rhs(r) = ws.b(rec.rows_C[static_cast<std::size_t>(r)]) - s.l(start + r);

        const RowBlock W = rec.Linv * rec.Omega;
        sw.IA[p].noalias() += rec.Omega.transpose() * W;
        flops::add(2 * flops::tri_solve(ud, ud) + flops::gemm(ud, ud, 6) + flops::gemm(6, ud, 6) + 36);
        VectorX Linv_rhs;
        if (with_bias)
        {
          Linv_rhs = rec.Linv * rec.rhs;
          sw.pA[p].noalias() -= rec.Omega.transpose() * Linv_rhs;
          flops::add(flops::gemv(ud, ud) + flops::gemv(6, ud) + 6);
        }
        // Schur complement on the remaining rows; the C rows are dropped below.
        const MatrixX G = s.L.block(0, start, k, d) * rec.Linv;
        s.Omega.topRows(k).noalias() -= G * rec.Omega;
        const MatrixX L_C = s.L.block(start, 0, d, k);
        s.L.topLeftCorner(k, k).noalias() -= G * L_C;
        if (with_bias)
          s.l.head(k).noalias() += G * rec.rhs;
        flops::add(flops::gemm(uk, ud, ud) + flops::gemm(uk, ud, 6) + 6 * uk + flops::gemm(uk, ud, uk) + uk * uk
                   + (with_bias ? flops::gemv(uk, ud) + uk : 0));

        remove_rows(s, start, d);
        auto & recs = ws.records[p];
        const auto slot = static_cast<std::size_t>(ws.n_records[p]++);
        if (slot < recs.size())
          recs[slot] = std::move(rec);
        else
          recs.push_back(std::move(rec));
        ++ws.stats.early_eliminations;
      }
    }

    /// Deliberate defects for exercising the check suite.
    enum class Mutation
    {
      None,
      FlipForwardCoupling ///< wrong sign on the multiplier term of the forward sweep
    };

    inline void begin_sweep(PvWorkspace & ws)
    {
      for (auto & s : ws.sets)
        s.rows.clear();
      std::fill(ws.n_records.begin(), ws.n_records.end(), 0);
      ws.stats = PvStats{};
    }

    /// Constrained articulated sweep. Without `early` every multiplier is
    /// solved at the base; with it, blocks are eliminated as soon as their
    /// dual block becomes invertible.
    inline ConstrainedSolution pv_sweep(const Model & model, const State & state, const VectorX & tau,
                                        const ConstraintSet & cs, PvWorkspace & ws, bool early,
                                        Mutation mutation = Mutation::None)
    {
      check_inputs(model, state, tau, cs, ws);
      ArticulatedSweep & sw = ws.sweep;
      forward_kinematics(model, state, sw.kin);
      reset_inertias(model, sw);
      reset_bias(model, sw, {});
      sweep_targets(model, cs, ws);
      begin_sweep(ws);

      const std::size_t n = static_cast<std::size_t>(model.n_links());
      const SpatialMotion a_world = world_acceleration(model);
      for (std::size_t i = n; i-- > 0;)
      {
        install_rows(cs, ws, i);
        factor_joint(model, i, sw);
        const Vector6 pa = project_bias(model, i, sw, tau);
        propagate_inertia(model, i, sw);
        propagate_bias(model, i, sw, pa);
        cross_joint(model, i, ws, true);
        if (model.parents[i] < 0)
          continue;
        if (early && ws.sets[i].size() > 0)
          eliminate_early(model, i, ws, true);
        merge_rows(ws.sets[i], ws.sets[static_cast<std::size_t>(model.parents[i])]);
      }

      // Base-level dual solve for whatever rows reached the root.
      RowSet & root = ws.sets[0];
      const int k = root.size();
      ws.stats.root_dual_dim = k;
      ws.stats.max_dual_dim = std::max(ws.stats.max_dual_dim, k);
      if (k > 0)
      {
        const auto uk = static_cast<std::uint64_t>(k);
        auto rhs = ws.gathered.head(k);
        for (int r = 0; r < k; ++r)
          rhs(r) = ws.b(root.rows[static_cast<std::size_t>(r)]) - root.l(r);
        // Rows are already in the frame of the root's parent (the world).
        rhs.noalias() -= root.Omega.topRows(k) * a_world.vector();
        ws.root_matrix.topLeftCorner(k, k) = root.L.topLeftCorner(k, k);
        double scale = root.L.topLeftCorner(k, k).diagonal().maxCoeff();
        for (std::size_t i = 1; i < n; ++i)
          for (int r = 0; r < ws.sets[i].size(); ++r)
            scale = std::max(scale, ws.sets[i].L(r, r));
        ws.root_llt.compute(ws.root_matrix.topLeftCorner(k, k));
        flops::add(flops::gemv(uk, 6) + 2 * uk + flops::cholesky(uk) + 2 * flops::tri_solve(uk, 1));
        if (ws.root_llt.info() != Eigen::Success || !(ws.root_llt.rcond() > kRootRcond)
            || !(ws.root_llt.matrixLLT().diagonal().array().square().minCoeff() > kPivotFloor * scale))
          throw SingularDual("the constraint rows are linearly dependent (dual block of size " + std::to_string(k)
                             + " is singular); use constrained_aba for rank-deficient or infeasible constraints");
        const VectorX lam = ws.root_llt.solve(rhs);
        for (int r = 0; r < k; ++r)
          ws.lambda(root.rows[static_cast<std::size_t>(r)]) = lam(r);
      }

      for (std::size_t i = 0; i < n; ++i)
      {
        const int kc = static_cast<int>(ws.cross_rows[i].size());
        const int nv = model.joints[i].nv();
        if (kc > 0 && nv > 0)
        {
          for (int r = 0; r < kc; ++r)
            ws.gathered(r) = ws.lambda(ws.cross_rows[i][static_cast<std::size_t>(r)]);
          JointVector extra = ws.OS[i].topRows(kc).transpose() * ws.gathered.head(kc);
          if (mutation == Mutation::FlipForwardCoupling)
            extra = -extra;
          flops::add(flops::gemv(static_cast<std::uint64_t>(nv), static_cast<std::uint64_t>(kc)));
          forward_link(model, i, sw, a_world, &extra);
        }
        else
          forward_link(model, i, sw, a_world);

        for (int t = ws.n_records[i]; t-- > 0;)
        {
          const EarlyRecord & rec = ws.records[i][static_cast<std::size_t>(t)];
          const int d = static_cast<int>(rec.rows_C.size());
          const int kr = static_cast<int>(rec.rows_R.size());
          VectorX r = rec.rhs - rec.Omega * sw.a[i];
          for (int j = 0; j < kr; ++j)
            ws.gathered(j) = ws.lambda(rec.rows_R[static_cast<std::size_t>(j)]);
          r.noalias() -= rec.L_CR * ws.gathered.head(kr);
          const VectorX lc = rec.Linv * r;
          for (int j = 0; j < d; ++j)
            ws.lambda(rec.rows_C[static_cast<std::size_t>(j)]) = lc(j);
          const auto ud = static_cast<std::uint64_t>(d);
          flops::add(flops::gemv(ud, 6) + ud + flops::gemv(ud, static_cast<std::uint64_t>(kr)) + ud
                     + flops::gemv(ud, ud));
        }
      }

      ConstrainedSolution sol;
      sol.qdd = sw.qdd;
      sol.lambda = ws.lambda;
      double res2 = 0.0;
      for (int c = 0; c < cs.size(); ++c)
        res2 += (cs[c].K * sw.a[static_cast<std::size_t>(cs[c].link)] - ws.b.segment(cs.offset(c), cs[c].dim()))
                  .squaredNorm();
      sol.primal_residual = std::sqrt(res2);
      return sol;
    }
  } // namespace detail

  /// Exact constrained forward dynamics; multipliers are solved in one dense
  /// system at the base.
  inline ConstrainedSolution pv_solve(const Model & model, const State & state, const VectorX & tau,
                                      const ConstraintSet & cs, PvWorkspace & ws)
  {
    return detail::pv_sweep(model, state, tau, cs, ws, false);
  }

  /// Exact constrained forward dynamics eliminating each constraint's
  /// multipliers at the first link where they are determined. Constraints
  /// that stay coupled to the base are solved there as in pv_solve.
  inline ConstrainedSolution pv_early_solve(const Model & model, const State & state, const VectorX & tau,
                                            const ConstraintSet & cs, PvWorkspace & ws)
  {
    return detail::pv_sweep(model, state, tau, cs, ws, true);
  }

} // namespace pvdyn
