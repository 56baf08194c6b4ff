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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pvdyn/errors.hpp"
#include "pvdyn/spatial.hpp"

namespace pvdyn
{

  using VectorX = Eigen::VectorXd;
  using MatrixX = Eigen::MatrixXd;
  using MotionSubspace = Eigen::Matrix<double, 6, Eigen::Dynamic, 0, 6, 6>;
  using ConstraintRows = Eigen::Matrix<double, Eigen::Dynamic, 6>;

  enum class JointType
  {
    Revolute,
    Prismatic,
    Floating,
    Fixed
  };

  enum class BaseType
  {
    Fixed,
    Floating
  };

  inline const char * to_string(JointType t)
  {
    switch (t)
    {
    case JointType::Revolute:
      return "revolute";
    case JointType::Prismatic:
      return "prismatic";
    case JointType::Floating:
      return "floating";
    case JointType::Fixed:
      return "fixed";
    }
    return "?";
  }

  /// A joint connecting a link to its parent. Revolute and prismatic joints
  /// carry a unit axis in the joint frame; a floating joint is configured by
  /// (x, y, z, qw, qx, qy, qz) and moves with the body-frame twist.
  struct Joint
  {
    JointType type = JointType::Fixed;
    Vector3 axis = Vector3::UnitZ();

    static Joint Revolute(const Vector3 & axis) { return {JointType::Revolute, axis}; }
    static Joint Prismatic(const Vector3 & axis) { return {JointType::Prismatic, axis}; }
    static Joint Floating() { return {JointType::Floating, Vector3::Zero()}; }
    static Joint Fixed() { return {JointType::Fixed, Vector3::Zero()}; }

    int nv() const
    {
      switch (type)
      {
      case JointType::Revolute:
      case JointType::Prismatic:
        return 1;
      case JointType::Floating:
        return 6;
      case JointType::Fixed:
        return 0;
      }
      return 0;
    }

    int nq() const { return type == JointType::Floating ? 7 : nv(); }

    MotionSubspace motion_subspace() const
    {
      MotionSubspace S(6, nv());
      switch (type)
      {
      case JointType::Revolute:
        S << axis, Vector3::Zero();
        break;
      case JointType::Prismatic:
        S << Vector3::Zero(), axis;
        break;
      case JointType::Floating:
        S.setIdentity();
        break;
      case JointType::Fixed:
        break;
      }
      return S;
    }

    /// Joint transform X_J(q) from the joint (predecessor) frame to the link.
    PlueckerTransform transform(const double * q) const
    {
      switch (type)
      {
      case JointType::Revolute:
        flops::add(30);
        return PlueckerTransform::Rotation(rotation_about(axis, q[0]).transpose());
      case JointType::Prismatic:
        flops::add(3);
        return PlueckerTransform::Translation(axis * q[0]);
      case JointType::Floating:
      {
        flops::add(40);
        const Eigen::Quaterniond quat(q[3], q[4], q[5], q[6]);
        return {quat.toRotationMatrix().transpose(), Vector3(q[0], q[1], q[2])};
      }
      case JointType::Fixed:
        return PlueckerTransform::Identity();
      }
      return PlueckerTransform::Identity();
    }
  };

  /// Kinematic tree. Links are stored in topological order (parent[i] < i);
  /// link 0 is the base, attached to the world by a floating or fixed joint.
  struct Model
  {
    std::vector<std::string> names;
    std::vector<int> parents;
    std::vector<Joint> joints;
    std::vector<PlueckerTransform> placements; // parent frame -> joint frame at q = 0
    std::vector<SpatialInertia> inertias;      // link frame
    Vector3 gravity = Vector3(0.0, 0.0, -9.81);

    // Derived by ModelBuilder::build().
    std::vector<int> idx_q;
    std::vector<int> idx_v;
    std::vector<std::vector<int>> children;
    std::vector<int> link_depth;
    int nq = 0;
    int nv = 0;
    int depth = 0;

    int n_links() const { return static_cast<int>(parents.size()); }

    BaseType base_type() const
    {
      return joints.front().type == JointType::Floating ? BaseType::Floating : BaseType::Fixed;
    }

    /// True when `a` is `b` or one of its ancestors.
    bool is_ancestor(int a, int b) const
    {
      while (b > a)
        b = parents[static_cast<std::size_t>(b)];
      return a == b;
    }

    int find_link(const std::string & name) const
    {
      const auto it = std::find(names.begin(), names.end(), name);
      return it == names.end() ? -1 : static_cast<int>(it - names.begin());
    }

    /// Parent dof of each dof (-1 at the root). Within a multi-dof joint the
    /// dofs form a chain.
    std::vector<int> dof_parents() const
    {
      std::vector<int> out(static_cast<std::size_t>(nv), -1);
      std::vector<int> last_dof(parents.size(), -1);
      for (std::size_t i = 0; i < parents.size(); ++i)
      {
        const int p = parents[i];
        int prev = p < 0 ? -1 : last_dof[static_cast<std::size_t>(p)];
        for (int k = 0; k < joints[i].nv(); ++k)
        {
          out[static_cast<std::size_t>(idx_v[i] + k)] = prev;
          prev = idx_v[i] + k;
        }
        last_dof[i] = prev;
      }
      return out;
    }
  };

  /// Incremental construction of a validated Model.
  class ModelBuilder
  {
  public:
    ModelBuilder(std::string base_name, BaseType base, const SpatialInertia & base_inertia,
                 const PlueckerTransform & base_placement = PlueckerTransform::Identity())
    {
      model_.names.push_back(std::move(base_name));
      model_.parents.push_back(-1);
      model_.joints.push_back(base == BaseType::Floating ? Joint::Floating() : Joint::Fixed());
      model_.placements.push_back(base_placement);
      model_.inertias.push_back(base_inertia);
    }

    int add_link(std::string name, int parent, const Joint & joint, const PlueckerTransform & placement,
                 const SpatialInertia & inertia)
    {
      model_.names.push_back(std::move(name));
      model_.parents.push_back(parent);
      model_.joints.push_back(joint);
      model_.placements.push_back(placement);
      model_.inertias.push_back(inertia);
      return static_cast<int>(model_.parents.size()) - 1;
    }

    ModelBuilder & set_gravity(const Vector3 & g)
    {
      model_.gravity = g;
      return *this;
    }

    Model build() const
    {
      Model m = model_;
      finalize(m);
      return m;
    }

    /// Validates the tree and fills the derived index tables.
    static void finalize(Model & m)
    {
      const std::size_t n = m.parents.size();
      if (n == 0)
        throw InvalidModel("model has no links");
      if (m.joints.size() != n || m.placements.size() != n || m.inertias.size() != n || m.names.size() != n)
        throw InvalidModel("per-link arrays have inconsistent sizes");
      if (m.parents[0] != -1)
        throw InvalidModel("link 0 must be the root");
      if (m.joints[0].type != JointType::Floating && m.joints[0].type != JointType::Fixed)
        throw InvalidModel("base joint must be floating or fixed");

      m.idx_q.assign(n, 0);
      m.idx_v.assign(n, 0);
      m.children.assign(n, {});
      m.link_depth.assign(n, 0);
      m.nq = 0;
      m.nv = 0;
      m.depth = 0;
      for (std::size_t i = 0; i < n; ++i)
      {
        const Joint & j = m.joints[i];
        if (i > 0)
        {
          const int p = m.parents[i];
          if (p < 0 || p >= static_cast<int>(i))
            throw InvalidModel("link '" + m.names[i] + "' breaks topological order");
          if (j.type == JointType::Floating)
            throw InvalidModel("floating joints are only supported on the base");
          m.children[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
        }
        if ((j.type == JointType::Revolute || j.type == JointType::Prismatic)
            && std::abs(j.axis.norm() - 1.0) > 1e-12)
          throw InvalidModel("joint axis of '" + m.names[i] + "' is not unit norm");
        const bool moving_base = i > 0 || j.type == JointType::Floating;
        if (moving_base && j.nv() > 0)
          check_inertia(m.names[i], m.inertias[i]);
        m.idx_q[i] = m.nq;
        m.idx_v[i] = m.nv;
        m.nq += j.nq();
        m.nv += j.nv();
        const int parent_depth = i == 0 ? 0 : m.link_depth[static_cast<std::size_t>(m.parents[i])];
        m.link_depth[i] = parent_depth + (j.nv() > 0 ? 1 : 0);
        m.depth = std::max(m.depth, m.link_depth[i]);
      }
    }

  private:
    static void check_inertia(const std::string & name, const SpatialInertia & I)
    {
      if (!(I.mass > 0.0))
        throw InvalidModel("link '" + name + "' must have positive mass");
      const Eigen::SelfAdjointEigenSolver<Matrix6> eig(I.matrix(), Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < 1e-12)
        throw InvalidModel("link '" + name + "' has a non positive-definite spatial inertia");
    }

    Model model_;
  };

  /// Generalised position and velocity.
  struct State
  {
    VectorX q;
    VectorX v;
  };

  inline void check_state(const Model & model, const State & s)
  {
    if (s.q.size() != model.nq || s.v.size() != model.nv)
      throw DimensionMismatch("state has (nq, nv) = (" + std::to_string(s.q.size()) + ", "
                              + std::to_string(s.v.size()) + "), model expects (" + std::to_string(model.nq)
                              + ", " + std::to_string(model.nv) + ")");
  }

  inline State neutral_state(const Model & model)
  {
    State s{VectorX::Zero(model.nq), VectorX::Zero(model.nv)};
    for (int i = 0; i < model.n_links(); ++i)
      if (model.joints[static_cast<std::size_t>(i)].type == JointType::Floating)
        s.q[model.idx_q[static_cast<std::size_t>(i)] + 3] = 1.0;
    return s;
  }

  /// Uniform joint angles in [-pi, pi], prismatic offsets in [-0.5, 0.5],
  /// base orientation uniform on S^3, base position in [-1, 1]^3 and every
  /// velocity component in [-1, 1].
  inline State random_state(const Model & model, std::uint64_t seed)
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    State s{VectorX::Zero(model.nq), VectorX::Zero(model.nv)};
    for (std::size_t i = 0; i < model.joints.size(); ++i)
    {
      const int iq = model.idx_q[i];
      switch (model.joints[i].type)
      {
      case JointType::Revolute:
        s.q[iq] = std::numbers::pi * unit(rng);
        break;
      case JointType::Prismatic:
        s.q[iq] = 0.5 * unit(rng);
        break;
      case JointType::Floating:
      {
        for (int k = 0; k < 3; ++k)
          s.q[iq + k] = unit(rng);
        Eigen::Vector4d quat;
        do
        {
          for (int k = 0; k < 4; ++k)
            quat[k] = gauss(rng);
        } while (quat.norm() < 1e-6);
        s.q.segment<4>(iq + 3) = quat.normalized();
        break;
      }
      case JointType::Fixed:
        break;
      }
    }
    for (int k = 0; k < model.nv; ++k)
      s.v[k] = unit(rng);
    return s;
  }

  /// q (+) dq: joint-space increment, with the exponential map on the
  /// floating block (dq given as a body-frame twist times dt).
  inline VectorX integrate(const Model & model, const VectorX & q, const VectorX & dq)
  {
    VectorX out = q;
    for (std::size_t i = 0; i < model.joints.size(); ++i)
    {
      const int iq = model.idx_q[i];
      const int iv = model.idx_v[i];
      switch (model.joints[i].type)
      {
      case JointType::Revolute:
      case JointType::Prismatic:
        out[iq] += dq[iv];
        break;
      case JointType::Floating:
      {
        const Eigen::Quaterniond quat(q[iq + 3], q[iq + 4], q[iq + 5], q[iq + 6]);
        const Vector3 dw = dq.segment<3>(iv);
        const Vector3 dv = dq.segment<3>(iv + 3);
        out.segment<3>(iq) += quat.toRotationMatrix() * dv;
        const double angle = dw.norm();
        Eigen::Quaterniond step = Eigen::Quaterniond::Identity();
        if (angle > 0.0)
          step = Eigen::Quaterniond(Eigen::AngleAxisd(angle, dw / angle));
        const Eigen::Quaterniond next = (quat * step).normalized();
        out[iq + 3] = next.w();
        out[iq + 4] = next.x();
        out[iq + 5] = next.y();
        out[iq + 6] = next.z();
        break;
      }
      case JointType::Fixed:
        break;
      }
    }
    return out;
  }

  struct BaumgarteGains
  {
    double kp = 0.0;
    double kd = 0.0;
  };

  /// Acceleration-level equality constraint K a_e = a_star on link e, where
  /// a_e is the link's spatial acceleration in its own frame.
  struct MotionConstraint
  {
    int link = 0;
    ConstraintRows K;
    VectorX a_star;
    std::optional<BaumgarteGains> baumgarte;
    /// World-to-link pose captured when position-level drift control is
    /// requested.
    std::optional<PlueckerTransform> anchor;

    int dim() const { return static_cast<int>(K.rows()); }

    /// Rows `first..first+count-1` of the 6x6 identity, i.e. a subset of the
    /// link's spatial acceleration components.
    static MotionConstraint Axes(int link, int first, int count)
    {
      MotionConstraint c;
      c.link = link;
      c.K = Matrix6::Identity().middleRows(first, count);
      c.a_star = VectorX::Zero(count);
      return c;
    }

    static MotionConstraint Weld(int link) { return Axes(link, 0, 6); }
    static MotionConstraint Point(int link) { return Axes(link, 3, 3); }
  };

  /// Ordered constraints with contiguous row offsets.
  class ConstraintSet
  {
  public:
    ConstraintSet() = default;

    int add(MotionConstraint c)
    {
      if (c.K.rows() < 1 || c.K.rows() > 6)
        throw InvalidConstraint("constraint must have between 1 and 6 rows");
      if (c.a_star.size() == 0)
        c.a_star = VectorX::Zero(c.K.rows());
      if (c.a_star.size() != c.K.rows())
        throw InvalidConstraint("a_star size does not match the number of rows");
      offsets_.push_back(m_);
      m_ += static_cast<int>(c.K.rows());
      constraints_.push_back(std::move(c));
      return static_cast<int>(constraints_.size()) - 1;
    }

    int m() const { return m_; }
    int size() const { return static_cast<int>(constraints_.size()); }
    bool empty() const { return constraints_.empty(); }
    int offset(int k) const { return offsets_[static_cast<std::size_t>(k)]; }

    const MotionConstraint & operator[](int k) const { return constraints_[static_cast<std::size_t>(k)]; }
    MotionConstraint & operator[](int k) { return constraints_[static_cast<std::size_t>(k)]; }

    auto begin() const { return constraints_.begin(); }
    auto end() const { return constraints_.end(); }

    VectorX stacked_a_star() const
    {
      VectorX out(m_);
      for (std::size_t k = 0; k < constraints_.size(); ++k)
        out.segment(offsets_[k], constraints_[k].dim()) = constraints_[k].a_star;
      return out;
    }

    void validate(const Model & model) const
    {
      for (const auto & c : constraints_)
        if (c.link < 0 || c.link >= model.n_links())
          throw InvalidConstraint("constraint references link " + std::to_string(c.link)
                                  + " outside the model");
    }

  private:
    std::vector<MotionConstraint> constraints_;
    std::vector<int> offsets_;
    int m_ = 0;
  };

} // namespace pvdyn
