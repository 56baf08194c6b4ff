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

#include <span>

#include "pvdyn/constrained/proximal.hpp"
#include "pvdyn/delassus/operator.hpp"

namespace pvdyn
{

  /// Extended force/motion propagator of a path of joints, read from the
  /// link end: `motion` carries a constraint row from the first link of the
  /// path to the parent of the last, accounting for the joints' articulated
  /// response; `psi` is the inverse-inertia accumulated along the way,
  /// expressed at the first link.
  struct ExtendedPropagator
  {
    Matrix6 motion = Matrix6::Identity();
    Matrix6 psi = Matrix6::Zero();

    /// Path `*this` followed by path `upper`.
    ExtendedPropagator then(const ExtendedPropagator & upper) const
    {
      flops::add(flops::gemm(6, 6, 6) + 2 * flops::gemm(6, 6, 6) + 36);
      ExtendedPropagator out;
      out.motion.noalias() = motion * upper.motion;
      out.psi = psi;
      out.psi.noalias() += motion * upper.psi * motion.transpose();
      return out;
    }
  };

  namespace detail
  {
    /// Propagator over the given links (child first, each the parent of the
    /// previous one), using the factored joints in `sw`.
    inline ExtendedPropagator extended_propagator(const Model & model, const ArticulatedSweep & sw,
                                                  std::span<const int> path)
    {
      ExtendedPropagator P;
      for (int jl : path)
      {
        const auto j = static_cast<std::size_t>(jl);
        const int nv = model.joints[j].nv();
        if (nv > 0)
        {
          const auto unv = static_cast<std::uint64_t>(nv);
          const MotionSubspace PS = P.motion * sw.S[j];
          const MotionSubspace PSD = PS * sw.Dinv[j];
          P.psi.noalias() += PSD * PS.transpose();
          P.motion.noalias() -= PSD * sw.U[j].transpose();
          flops::add(flops::gemm(6, 6, unv) + flops::gemm(6, unv, unv) + flops::gemm(6, unv, 6) + 36
                     + flops::gemm(6, unv, 6) + 36);
        }
        Matrix6 moved;
        rows_times_transform(sw.kin.X_parent[j], P.motion, moved);
        P.motion = moved;
      }
      return P;
    }

    inline void factor_inertias(const Model & model, ArticulatedSweep & sw)
    {
      for (std::size_t i = sw.IA.size(); i-- > 0;)
      {
        if (i == 0 && model.joints[0].type == JointType::Floating)
        {
          try
          {
            factor_joint(model, i, sw);
          }
          catch (const SingularJointInertia &)
          {
            throw SingularBaseInertia("the floating base has a singular articulated inertia");
          }
        }
        else
          factor_joint(model, i, sw);
        propagate_inertia(model, i, sw);
      }
    }

    /// J M^-1 J^T for the inertias currently factored in ws.sweep, assembled
    /// over the tree restricted to constrained links and their junctions.
    inline MatrixX assemble_virtual_delassus(const Model & model, const ConstraintSet & cs, PvWorkspace & ws)
    {
      const ArticulatedSweep & sw = ws.sweep;
      const std::size_t nv_nodes = ws.vnodes.size();
      for (std::size_t v = 0; v < nv_nodes; ++v)
      {
        const VirtualNode & node = ws.vnodes[v];
        if (node.parent < 0)
        {
          // Root: only its own joint, no further propagation.
          const int nv0 = model.joints[0].nv();
          ws.Xi[v].setZero();
          if (nv0 > 0)
          {
            ws.Xi[v].noalias() = sw.S[0] * sw.Dinv[0] * sw.S[0].transpose();
            const auto unv = static_cast<std::uint64_t>(nv0);
            flops::add(flops::gemm(6, unv, unv) + flops::gemm(6, unv, 6));
          }
          continue;
        }
        const ExtendedPropagator P = extended_propagator(model, sw, node.segment);
        ws.Pi[v] = P.motion;
        // Parents precede children in link order, so Xi of the parent is final.
        ws.Xi[v] = P.psi;
        ws.Xi[v].noalias() += P.motion * ws.Xi[static_cast<std::size_t>(node.parent)] * P.motion.transpose();
        flops::add(2 * flops::gemm(6, 6, 6) + 36);
      }

      for (int k = 0; k < cs.size(); ++k)
      {
        const auto uk = static_cast<std::size_t>(k);
        auto & F = ws.Fpath[uk];
        const auto & path = ws.vpath[uk];
        F[0] = cs[k].K;
        for (std::size_t t = 1; t < path.size(); ++t)
        {
          F[t].noalias() = F[t - 1] * ws.Pi[static_cast<std::size_t>(path[t - 1])];
          flops::add(flops::gemm(static_cast<std::uint64_t>(cs[k].dim()), 6, 6));
          ws.stats.propagations += static_cast<std::uint64_t>(cs[k].dim());
        }
      }

      MatrixX Lambda(cs.m(), cs.m());
      for (int e = 0; e < cs.size(); ++e)
        for (int f = e; f < cs.size(); ++f)
        {
          const auto & pe = ws.vpath[static_cast<std::size_t>(e)];
          const auto & pf = ws.vpath[static_cast<std::size_t>(f)];
          std::size_t te = pe.size() - 1;
          std::size_t tf = pf.size() - 1;
          while (te > 0 && tf > 0 && pe[te - 1] == pf[tf - 1])
          {
            --te;
            --tf;
          }
          const auto c = static_cast<std::size_t>(pe[te]);
          const auto & Fe = ws.Fpath[static_cast<std::size_t>(e)][te];
          const auto & Ff = ws.Fpath[static_cast<std::size_t>(f)][tf];
          const auto de = static_cast<std::uint64_t>(Fe.rows());
          const auto df = static_cast<std::uint64_t>(Ff.rows());
          auto block = Lambda.block(cs.offset(e), cs.offset(f), cs[e].dim(), cs[f].dim());
          block.noalias() = (Fe * ws.Xi[c]) * Ff.transpose();
          flops::add(flops::gemm(de, 6, 6) + flops::gemm(de, 6, df));
          if (f != e)
            Lambda.block(cs.offset(f), cs.offset(e), cs[f].dim(), cs[e].dim()) = block.transpose();
        }
      return Lambda;
    }

    inline std::vector<int> row_offsets(const ConstraintSet & cs)
    {
      std::vector<int> out;
      for (int k = 0; k < cs.size(); ++k)
        out.push_back(cs.offset(k));
      return out;
    }
  } // namespace detail

  /// Delassus matrix as the dual block left at the base by the constrained
  /// sweep, with no dependence on velocities or torques.
  inline DelassusOperator pv_osim(const Model & model, const State & state, const ConstraintSet & cs, PvWorkspace & ws)
  {
    ws.check(model, cs);
    check_state(model, state);
    detail::ArticulatedSweep & sw = ws.sweep;
    position_kinematics(model, state.q, sw.kin);
    detail::reset_inertias(model, sw);
    detail::begin_sweep(ws);
    const std::size_t n = static_cast<std::size_t>(model.n_links());
    for (std::size_t i = n; i-- > 0;)
    {
      detail::install_rows(cs, ws, i);
      if (i == 0 && model.joints[0].type == JointType::Floating)
      {
        try
        {
          detail::factor_joint(model, i, sw);
        }
        catch (const SingularJointInertia &)
        {
          throw SingularBaseInertia("the floating base has a singular articulated inertia");
        }
      }
      else
        detail::factor_joint(model, i, sw);
      detail::propagate_inertia(model, i, sw);
      detail::cross_joint(model, i, ws, false);
      if (model.parents[i] >= 0)
        detail::merge_rows(ws.sets[i], ws.sets[static_cast<std::size_t>(model.parents[i])]);
    }
    const detail::RowSet & root = ws.sets[0];
    const int k = root.size();
    ws.stats.root_dual_dim = k;
    ws.stats.max_dual_dim = k;
    MatrixX Lambda(cs.m(), cs.m());
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        Lambda(root.rows[static_cast<std::size_t>(a)], root.rows[static_cast<std::size_t>(b)]) = root.L(a, b);
    return DelassusOperator::Explicit(std::move(Lambda), detail::row_offsets(cs));
  }

  /// Delassus matrix assembled from extended propagators between constrained
  /// links and their common ancestors; constraint rows move only along the
  /// edges of that reduced tree.
  inline DelassusOperator pv_osimr(const Model & model, const State & state, const ConstraintSet & cs,
                                   PvWorkspace & ws)
  {
    ws.check(model, cs);
    check_state(model, state);
    ws.stats = PvStats{};
    detail::ArticulatedSweep & sw = ws.sweep;
    position_kinematics(model, state.q, sw.kin);
    detail::reset_inertias(model, sw);
    detail::factor_inertias(model, sw);
    MatrixX Lambda = detail::assemble_virtual_delassus(model, cs, ws);
    return DelassusOperator::Explicit(std::move(Lambda), detail::row_offsets(cs));
  }

  /// Damped inverse (Lambda + mu I)^-1 without forming or factoring Lambda.
  /// The constraints are absorbed into the articulated inertias as in
  /// constrained_aba; the constraint-space inverse inertia of that augmented
  /// system, L~, satisfies (Lambda + mu I)^-1 = mu^-1 (I - mu^-1 L~).
  inline DelassusOperator caba_osim(const Model & model, const State & state, const ConstraintSet & cs,
                                    const SolverSettings & settings, PvWorkspace & ws)
  {
    ws.check(model, cs);
    check_state(model, state);
    settings.validate(cs.m());
    ws.stats = PvStats{};
    detail::ArticulatedSweep & sw = ws.sweep;
    position_kinematics(model, state.q, sw.kin);
    detail::reset_inertias(model, sw);
    const double mu = settings.mu;
    for (const MotionConstraint & c : cs)
    {
      sw.IA[static_cast<std::size_t>(c.link)].noalias() += (1.0 / mu) * (c.K.transpose() * c.K);
      flops::add(flops::gemm(6, static_cast<std::uint64_t>(c.dim()), 6) + 72);
    }
    detail::factor_inertias(model, sw);
    MatrixX X = detail::assemble_virtual_delassus(model, cs, ws);
    X *= -1.0 / (mu * mu);
    X.diagonal().array() += 1.0 / mu;
    const auto um = static_cast<std::uint64_t>(cs.m());
    flops::add(um * um + um);
    return DelassusOperator::DampedInverse(std::move(X), mu, detail::row_offsets(cs));
  }

} // namespace pvdyn
