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

#include "pvdyn/kinematics.hpp"

// Per-link building blocks of the articulated-body recursions. ABA and every
// constrained variant are assembled from these steps; the variants differ
// only in what they add to the link inertias and bias forces and in how the
// constraint multipliers are recovered.
namespace pvdyn::detail
{

  using JointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
  using JointVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

  struct ArticulatedSweep
  {
    KinematicsCache kin;
    std::vector<MotionSubspace> S; // joint motion subspaces (model constant)
    std::vector<Matrix6> IA;       // articulated inertia before the joint projection
    std::vector<Matrix6> Ia;       // after the joint projection, in link coordinates
    std::vector<MotionSubspace> U; // IA S
    std::vector<JointMatrix> Dinv; // (S^T IA S)^-1
    std::vector<Vector6> pA;       // bias force before the joint projection
    std::vector<JointVector> u;    // tau - S^T pA
    std::vector<Vector6> a;        // link accelerations, offset by -gravity
    VectorX qdd;

    ArticulatedSweep() = default;

    explicit ArticulatedSweep(const Model & model) { resize(model); }

    void resize(const Model & model)
    {
      const auto n = static_cast<std::size_t>(model.n_links());
      S.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        S[i] = model.joints[i].motion_subspace();
      IA.resize(n);
      Ia.resize(n);
      U.resize(n);
      Dinv.resize(n);
      pA.resize(n);
      u.resize(n);
      a.resize(n);
      qdd.resize(model.nv);
      kin.resize(n);
    }
  };

  /// IA_i = I_i for every link.
  inline void reset_inertias(const Model & model, ArticulatedSweep & sw)
  {
    for (std::size_t i = 0; i < sw.IA.size(); ++i)
      sw.IA[i] = model.inertias[i].matrix();
  }

  /// pA_i = v_i x* I_i v_i - f_ext_i.
  inline void reset_bias(const Model & model, ArticulatedSweep & sw, std::span<const SpatialForce> f_ext)
  {
    if (!f_ext.empty() && f_ext.size() != sw.pA.size())
      throw DimensionMismatch("external forces must be given for every link");
    for (std::size_t i = 0; i < sw.pA.size(); ++i)
    {
      SpatialForce p = SpatialForce::Zero();
      if (sw.kin.has_velocity)
        p = cross(sw.kin.v[i], model.inertias[i].apply(sw.kin.v[i]));
      if (!f_ext.empty())
        p -= f_ext[i];
      sw.pA[i] = p.vector();
    }
  }

  /// Factors the joint of link i: U, D^-1 and the projected inertia Ia.
  inline void factor_joint(const Model & model, std::size_t i, ArticulatedSweep & sw)
  {
    const int nv = model.joints[i].nv();
    if (nv == 0)
    {
      sw.Ia[i] = sw.IA[i];
      return;
    }
    const auto unv = static_cast<std::uint64_t>(nv);
    sw.U[i].noalias() = sw.IA[i] * sw.S[i];
    JointMatrix D(nv, nv);
    D.noalias() = sw.S[i].transpose() * sw.U[i];
    flops::add(flops::gemm(6, 6, unv) + flops::gemm(unv, 6, unv));
    if (nv == 1)
    {
      if (!(D(0, 0) > 0.0) || !std::isfinite(D(0, 0)))
        throw SingularJointInertia("joint of link '" + model.names[i] + "' has a non-positive articulated inertia");
      sw.Dinv[i].resize(1, 1);
      sw.Dinv[i](0, 0) = 1.0 / D(0, 0);
      flops::add(1);
    }
    else
    {
      Eigen::LLT<JointMatrix> llt(D);
      if (llt.info() != Eigen::Success || llt.rcond() < 1e-14)
        throw SingularJointInertia("joint of link '" + model.names[i] + "' has a singular articulated inertia");
      sw.Dinv[i] = llt.solve(JointMatrix::Identity(nv, nv));
      flops::add(flops::cholesky(unv) + 2 * flops::tri_solve(unv, unv));
    }
    const MotionSubspace UD = sw.U[i] * sw.Dinv[i];
    sw.Ia[i] = sw.IA[i];
    sw.Ia[i].noalias() -= UD * sw.U[i].transpose();
    flops::add(flops::gemm(6, unv, unv) + flops::gemm(6, unv, 6) + 36);
  }

  inline void propagate_inertia(const Model & model, std::size_t i, ArticulatedSweep & sw)
  {
    const int p = model.parents[i];
    if (p < 0)
      return;
    sw.IA[static_cast<std::size_t>(p)] += congruence(sw.kin.X_parent[i], sw.Ia[i]);
    flops::add(36);
  }

  /// u_i = tau_i - S^T pA_i and the projected bias pa = pA + Ia c + U D^-1 u.
  inline Vector6 project_bias(const Model & model, std::size_t i, ArticulatedSweep & sw, const VectorX & tau)
  {
    const int nv = model.joints[i].nv();
    if (nv == 0)
      return sw.pA[i];
    const auto unv = static_cast<std::uint64_t>(nv);
    sw.u[i] = tau.segment(model.idx_v[i], nv) - sw.S[i].transpose() * sw.pA[i];
    Vector6 pa = sw.pA[i] + sw.Ia[i] * sw.kin.c[i].vector() + sw.U[i] * (sw.Dinv[i] * sw.u[i]);
    flops::add(flops::gemv(unv, 6) + unv + 66 + 6 + flops::gemv(unv, unv) + flops::gemv(6, unv) + 6);
    return pa;
  }

  inline void propagate_bias(const Model & model, std::size_t i, ArticulatedSweep & sw, const Vector6 & pa)
  {
    const int p = model.parents[i];
    if (p < 0)
      return;
    sw.pA[static_cast<std::size_t>(p)] += sw.kin.X_parent[i].apply_transpose(SpatialForce(pa)).vector();
    flops::add(6);
  }

  /// Acceleration of link i from its parent's, with an extra generalised
  /// force `extra` (nv) added to the joint equation.
  inline void forward_link(const Model & model, std::size_t i, ArticulatedSweep & sw, const SpatialMotion & a_world,
                           const JointVector * extra = nullptr)
  {
    const int p = model.parents[i];
    const SpatialMotion & a_parent = p < 0 ? a_world : SpatialMotion(sw.a[static_cast<std::size_t>(p)]);
    Vector6 ai = sw.kin.X_parent[i].apply(a_parent).vector();
    if (sw.kin.has_velocity)
    {
      ai += sw.kin.c[i].vector();
      flops::add(6);
    }
    const int nv = model.joints[i].nv();
    if (nv > 0)
    {
      const auto unv = static_cast<std::uint64_t>(nv);
      JointVector rhs = sw.u[i] - sw.U[i].transpose() * ai;
      if (extra)
        rhs += *extra;
      const JointVector qdd = sw.Dinv[i] * rhs;
      sw.qdd.segment(model.idx_v[i], nv) = qdd;
      ai.noalias() += sw.S[i] * qdd;
      flops::add(flops::gemv(unv, 6) + unv + (extra ? unv : 0) + flops::gemv(unv, unv) + flops::gemv(6, unv) + 6);
    }
    sw.a[i] = ai;
  }

  inline SpatialMotion world_acceleration(const Model & model)
  {
    return SpatialMotion(Vector3::Zero(), Vector3(-model.gravity));
  }

} // namespace pvdyn::detail
