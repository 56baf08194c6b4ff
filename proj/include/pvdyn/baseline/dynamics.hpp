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
#include <vector>

#include "pvdyn/baseline/articulated.hpp"

namespace pvdyn
{

  /// Joint-space inertia together with the dof ancestry it is sparse in.
  struct MassMatrix
  {
    MatrixX matrix;
    std::vector<int> dof_parents;
  };

  /// Inverse dynamics: tau = M qdd + h - J_ext^T f_ext. External forces are
  /// given per link, in link coordinates.
  inline VectorX rnea(const Model & model, const State & state, const VectorX & qdd,
                      std::span<const SpatialForce> f_ext = {})
  {
    if (qdd.size() != model.nv)
      throw DimensionMismatch("qdd has size " + std::to_string(qdd.size()) + ", expected "
                              + std::to_string(model.nv));
    const auto n = static_cast<std::size_t>(model.n_links());
    if (!f_ext.empty() && f_ext.size() != n)
      throw DimensionMismatch("external forces must be given for every link");
    const KinematicsCache kin = forward_kinematics(model, state);
    const SpatialMotion a_world = detail::world_acceleration(model);

    std::vector<SpatialMotion> a(n);
    std::vector<SpatialForce> f(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      const int p = model.parents[i];
      a[i] = kin.X_parent[i].apply(p < 0 ? a_world : a[static_cast<std::size_t>(p)]) + kin.c[i];
      const int nv = model.joints[i].nv();
      if (nv > 0)
      {
        a[i] += SpatialMotion(Vector6(model.joints[i].motion_subspace() * qdd.segment(model.idx_v[i], nv)));
        flops::add(static_cast<std::uint64_t>(12 * nv));
      }
      f[i] = model.inertias[i].apply(a[i]) + cross(kin.v[i], model.inertias[i].apply(kin.v[i]));
      if (!f_ext.empty())
        f[i] -= f_ext[i];
    }

    VectorX tau(model.nv);
    for (std::size_t i = n; i-- > 0;)
    {
      const int nv = model.joints[i].nv();
      if (nv > 0)
      {
        tau.segment(model.idx_v[i], nv) = model.joints[i].motion_subspace().transpose() * f[i].vector();
        flops::add(static_cast<std::uint64_t>(11 * nv));
      }
      const int p = model.parents[i];
      if (p >= 0)
        f[static_cast<std::size_t>(p)] += kin.X_parent[i].apply_transpose(f[i]);
    }
    return tau;
  }

  /// h(q, v): Coriolis, centrifugal and gravity terms.
  inline VectorX nonlinear_effects(const Model & model, const State & state)
  {
    return rnea(model, state, VectorX::Zero(model.nv));
  }

  /// Composite-rigid-body algorithm on precomputed link placements.
  inline MassMatrix crba(const Model & model, const KinematicsCache & kin)
  {
    const auto n = static_cast<std::size_t>(model.n_links());

    std::vector<SpatialInertia> Ic(model.inertias);
    for (std::size_t i = n; i-- > 1;)
    {
      const int p = model.parents[i];
      Ic[static_cast<std::size_t>(p)] += Ic[i].expressed_in_parent(kin.X_parent[i]);
    }

    MassMatrix M{MatrixX::Zero(model.nv, model.nv), model.dof_parents()};
    for (std::size_t i = 0; i < n; ++i)
    {
      const int nv = model.joints[i].nv();
      if (nv == 0)
        continue;
      const MotionSubspace S = model.joints[i].motion_subspace();
      Eigen::Matrix<double, 6, Eigen::Dynamic, 0, 6, 6> F(6, nv);
      for (int c = 0; c < nv; ++c)
        F.col(c) = Ic[i].apply(SpatialMotion(Vector6(S.col(c)))).vector();
      const int vi = model.idx_v[i];
      M.matrix.block(vi, vi, nv, nv) = S.transpose() * F;
      flops::add(static_cast<std::uint64_t>(11 * nv * nv));
      for (std::size_t j = i; model.parents[j] >= 0;)
      {
        for (int c = 0; c < nv; ++c)
          F.col(c) = kin.X_parent[j].apply_transpose(SpatialForce(Vector6(F.col(c)))).vector();
        j = static_cast<std::size_t>(model.parents[j]);
        const int nj = model.joints[j].nv();
        if (nj == 0)
          continue;
        const int vj = model.idx_v[j];
        M.matrix.block(vj, vi, nj, nv) = model.joints[j].motion_subspace().transpose() * F;
        M.matrix.block(vi, vj, nv, nj) = M.matrix.block(vj, vi, nj, nv).transpose();
        flops::add(static_cast<std::uint64_t>(11 * nv * nj));
      }
    }
    return M;
  }
  /// Composite-rigid-body algorithm.
  inline MassMatrix crba(const Model & model, const State & state)
  {
    check_state(model, state);
    KinematicsCache kin;
    position_kinematics(model, state.q, kin);
    return crba(model, kin);
  }


  /// Articulated-body algorithm on a caller-provided sweep buffer.
  inline const VectorX & aba(const Model & model, const State & state, const VectorX & tau,
                             detail::ArticulatedSweep & sw, std::span<const SpatialForce> f_ext = {})
  {
    if (tau.size() != model.nv)
      throw DimensionMismatch("tau has size " + std::to_string(tau.size()) + ", expected "
                              + std::to_string(model.nv));
    forward_kinematics(model, state, sw.kin);
    detail::reset_inertias(model, sw);
    detail::reset_bias(model, sw, f_ext);
    const auto n = static_cast<std::size_t>(model.n_links());
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
    return sw.qdd;
  }

  /// Unconstrained forward dynamics qdd = M^-1 (tau - h + J_ext^T f_ext).
  inline VectorX aba(const Model & model, const State & state, const VectorX & tau,
                     std::span<const SpatialForce> f_ext = {})
  {
    detail::ArticulatedSweep sw(model);
    return aba(model, state, tau, sw, f_ext);
  }

} // namespace pvdyn
