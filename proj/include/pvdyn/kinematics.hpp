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

#include <vector>

#include "pvdyn/model.hpp"

namespace pvdyn
{

  using LinkJacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

  /// Per-link kinematic quantities at one (q, v), all in link-local frames.
  struct KinematicsCache
  {
    std::vector<PlueckerTransform> X_parent; ///< parent -> link at q
    std::vector<PlueckerTransform> X_world;  ///< world -> link at q
    std::vector<SpatialMotion> v;            ///< link velocity
    std::vector<SpatialMotion> c;            ///< velocity-product term v x S qdot
    std::vector<SpatialMotion> a_vp;         ///< link acceleration for qdd = 0, no gravity
    VectorX q;
    VectorX qd;
    bool has_velocity = false;

    void resize(std::size_t n)
    {
      X_parent.resize(n);
      X_world.resize(n);
      v.resize(n);
      c.resize(n);
      a_vp.resize(n);
    }
  };

  /// Joint and world transforms only.
  inline void position_kinematics(const Model & model, const VectorX & q, KinematicsCache & cache)
  {
    if (q.size() != model.nq)
      throw DimensionMismatch("q has size " + std::to_string(q.size()) + ", expected " + std::to_string(model.nq));
    const std::size_t n = static_cast<std::size_t>(model.n_links());
    cache.resize(n);
    cache.q = q;
    cache.has_velocity = false;
    for (std::size_t i = 0; i < n; ++i)
    {
      const Joint & j = model.joints[i];
      const PlueckerTransform XJ = j.transform(q.data() + model.idx_q[i]);
      cache.X_parent[i] = j.type == JointType::Fixed ? model.placements[i] : XJ * model.placements[i];
      const int p = model.parents[i];
      cache.X_world[i] = p < 0 ? cache.X_parent[i] : cache.X_parent[i] * cache.X_world[static_cast<std::size_t>(p)];
      cache.v[i] = SpatialMotion::Zero();
      cache.c[i] = SpatialMotion::Zero();
      cache.a_vp[i] = SpatialMotion::Zero();
    }
  }

  inline void forward_kinematics(const Model & model, const State & state, KinematicsCache & cache)
  {
    check_state(model, state);
    position_kinematics(model, state.q, cache);
    cache.qd = state.v;
    cache.has_velocity = true;
    const std::size_t n = static_cast<std::size_t>(model.n_links());
    for (std::size_t i = 0; i < n; ++i)
    {
      const Joint & j = model.joints[i];
      const int p = model.parents[i];
      SpatialMotion vJ;
      if (j.nv() > 0)
      {
        flops::add(static_cast<std::uint64_t>(12 * j.nv()));
        vJ = SpatialMotion(Vector6(j.motion_subspace() * state.v.segment(model.idx_v[i], j.nv())));
      }
      if (p < 0)
      {
        cache.v[i] = vJ;
        cache.c[i] = SpatialMotion::Zero();
        cache.a_vp[i] = SpatialMotion::Zero();
      }
      else
      {
        const auto pp = static_cast<std::size_t>(p);
        const SpatialMotion vp = cache.X_parent[i].apply(cache.v[pp]);
        cache.v[i] = vp + vJ;
        cache.c[i] = j.nv() > 0 ? cross(cache.v[i], vJ) : SpatialMotion::Zero();
        cache.a_vp[i] = cache.X_parent[i].apply(cache.a_vp[pp]) + cache.c[i];
      }
    }
  }

  inline KinematicsCache forward_kinematics(const Model & model, const State & state)
  {
    KinematicsCache cache;
    forward_kinematics(model, state, cache);
    return cache;
  }

  /// Spatial acceleration of the world frame used to fold gravity into the
  /// sweeps (a_0 = -g), expressed in link `i`.
  inline SpatialMotion gravity_bias_in_link(const Model & model, const KinematicsCache & cache, int i)
  {
    flops::add(15);
    return SpatialMotion(Vector3::Zero(), Vector3(-(cache.X_world[static_cast<std::size_t>(i)].rotation * model.gravity)));
  }

  /// Local-frame geometric Jacobian of `link`: J v = v_link. Columns of
  /// non-ancestor dofs are zero.
  inline LinkJacobian link_jacobian(const Model & model, const KinematicsCache & cache, int link)
  {
    LinkJacobian J = LinkJacobian::Zero(6, model.nv);
    const PlueckerTransform & Xl = cache.X_world[static_cast<std::size_t>(link)];
    for (int k = link; k >= 0; k = model.parents[static_cast<std::size_t>(k)])
    {
      const auto kk = static_cast<std::size_t>(k);
      const Joint & j = model.joints[kk];
      if (j.nv() == 0)
        continue;
      const PlueckerTransform X_rel = k == link ? PlueckerTransform::Identity() : Xl * cache.X_world[kk].inverse();
      const MotionSubspace S = j.motion_subspace();
      for (int col = 0; col < j.nv(); ++col)
        J.col(model.idx_v[kk] + col) = X_rel.apply(SpatialMotion(Vector6(S.col(col)))).vector();
    }
    return J;
  }

  /// Stacked constraint Jacobian: the block of constraint k is K_k times the
  /// link Jacobian of its link, placed at the constraint's row offset.
  inline MatrixX constraint_jacobian(const Model & model, const KinematicsCache & cache, const ConstraintSet & cs)
  {
    MatrixX J = MatrixX::Zero(cs.m(), model.nv);
    for (int k = 0; k < cs.size(); ++k)
    {
      const MotionConstraint & c = cs[k];
      const LinkJacobian Jl = link_jacobian(model, cache, c.link);
      int n_cols = 0;
      for (int a = c.link; a >= 0; a = model.parents[static_cast<std::size_t>(a)])
        n_cols += model.joints[static_cast<std::size_t>(a)].nv();
      flops::add(flops::gemm(static_cast<std::uint64_t>(c.dim()), 6, static_cast<std::uint64_t>(n_cols)));
      J.middleRows(cs.offset(k), c.dim()).noalias() = c.K * Jl;
    }
    return J;
  }

  /// Drift gamma_k = K_k a_vp(link_k): the constraint-space acceleration
  /// produced by velocity products alone, so that the constraints read
  /// J qdd = a_star - gamma.
  inline VectorX constraint_drift(const Model & model, const KinematicsCache & cache, const ConstraintSet & cs)
  {
    (void)model;
    if (!cache.has_velocity)
      throw DimensionMismatch("constraint_drift needs a cache computed with velocities");
    VectorX gamma(cs.m());
    for (int k = 0; k < cs.size(); ++k)
    {
      const MotionConstraint & c = cs[k];
      gamma.segment(cs.offset(k), c.dim()) = c.K * cache.a_vp[static_cast<std::size_t>(c.link)].vector();
    }
    return gamma;
  }

  /// Pose error of a link relative to a reference world-to-link transform,
  /// expressed in the current link frame as (rotation vector; displacement).
  inline Vector6 pose_error(const PlueckerTransform & current, const PlueckerTransform & reference)
  {
    const Matrix3 dR = reference.rotation * current.rotation.transpose();
    const Eigen::AngleAxisd aa(dR);
    Vector6 e;
    e.head<3>() = aa.angle() * aa.axis();
    e.tail<3>() = current.rotation * (current.translation - reference.translation);
    return e;
  }

} // namespace pvdyn
