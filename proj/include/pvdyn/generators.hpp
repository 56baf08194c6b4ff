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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pvdyn/model.hpp"

/// Deterministic synthetic robots used by tests and benchmarks.
namespace pvdyn
{

  enum class ChainJoint
  {
    Revolute,
    Prismatic
  };

  namespace detail
  {
    inline SpatialInertia rod_inertia(double mass, const Vector3 & com, double length)
    {
      const double axial = 0.5 * mass * 0.02 * 0.02 + 1e-4;
      const double transverse = mass * length * length / 12.0 + 1e-4;
      return SpatialInertia::FromMassComInertia(mass, com, Vector3(axial, transverse, transverse).asDiagonal());
    }

    inline SpatialInertia box_inertia(double mass, const Vector3 & com, const Vector3 & size)
    {
      const Vector3 s2 = size.cwiseProduct(size);
      const Vector3 diag(s2.y() + s2.z(), s2.x() + s2.z(), s2.x() + s2.y());
      return SpatialInertia::FromMassComInertia(mass, com, Matrix3((mass / 12.0) * diag.asDiagonal()));
    }

    inline Vector3 cyclic_axis(int k)
    {
      switch (k % 3)
      {
      case 0:
        return Vector3::UnitZ();
      case 1:
        return Vector3::UnitY();
      default:
        return Vector3::UnitX();
      }
    }
  } // namespace detail

  /// Serial chain on a fixed base: unit link masses, 0.5 m offsets along x,
  /// joint axes cycling z, y, x.
  inline Model generate_chain(int n_joints, ChainJoint kind = ChainJoint::Revolute)
  {
    if (n_joints < 1)
      throw InvalidModel("a chain needs at least one joint");
    ModelBuilder b("base", BaseType::Fixed, detail::rod_inertia(1.0, Vector3(0.25, 0, 0), 0.5));
    int parent = 0;
    for (int k = 0; k < n_joints; ++k)
    {
      const Vector3 axis = detail::cyclic_axis(k);
      const Joint j = kind == ChainJoint::Revolute ? Joint::Revolute(axis) : Joint::Prismatic(axis);
      parent = b.add_link("link" + std::to_string(k + 1), parent, j,
                          PlueckerTransform::Translation(Vector3(0.5, 0, 0)),
                          detail::rod_inertia(1.0, Vector3(0.25, 0, 0), 0.5));
    }
    return b.build();
  }

  /// Random tree of revolute joints. Links are attached level by level to a
  /// randomly chosen parent on the shallowest level that still has fewer
  /// than `branching` children, so the depth stays close to
  /// log_branching(n_joints).
  inline Model generate_tree(int n_joints, int branching, std::uint64_t seed, BaseType base = BaseType::Fixed)
  {
    if (n_joints < 1)
      throw InvalidModel("a tree needs at least one joint");
    if (branching < 1)
      throw InvalidModel("branching factor must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.0, 1.0);

    auto random_unit = [&] {
      Vector3 v;
      do
      {
        v = Vector3(unit(rng), unit(rng), unit(rng));
      } while (v.norm() < 0.1);
      return Vector3(v.normalized());
    };
    auto random_inertia = [&] {
      const double mass = 0.5 + 1.5 * pos(rng);
      const Vector3 com(0.2 * unit(rng), 0.2 * unit(rng), 0.2 * unit(rng));
      const Vector3 diag(0.01 + 0.09 * pos(rng), 0.01 + 0.09 * pos(rng), 0.01 + 0.09 * pos(rng));
      const Matrix3 R = rotation_about(random_unit(), std::numbers::pi * unit(rng));
      return SpatialInertia::FromMassComInertia(mass, com, Matrix3(R * diag.asDiagonal() * R.transpose()));
    };

    const SpatialInertia base_inertia = base == BaseType::Floating
                                          ? detail::box_inertia(5.0, Vector3::Zero(), Vector3(0.4, 0.3, 0.2))
                                          : random_inertia();
    ModelBuilder b("base", base, base_inertia);
    std::vector<int> child_count{0};
    std::vector<int> level{0};
    std::vector<int> next_level;
    for (int k = 0; k < n_joints; ++k)
    {
      std::vector<int> open;
      for (int l : level)
        if (child_count[static_cast<std::size_t>(l)] < branching)
          open.push_back(l);
      if (open.empty())
      {
        level.swap(next_level);
        next_level.clear();
        --k;
        continue;
      }
      const int parent = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
      const Vector3 offset = (0.2 + 0.3 * pos(rng)) * random_unit();
      const Matrix3 frame = rotation_about(random_unit(), 0.5 * std::numbers::pi * unit(rng));
      const int id = b.add_link("link" + std::to_string(k + 1), parent, Joint::Revolute(random_unit()),
                                PlueckerTransform(frame, offset), random_inertia());
      ++child_count[static_cast<std::size_t>(parent)];
      child_count.push_back(0);
      next_level.push_back(id);
    }
    return b.build();
  }

  namespace detail
  {
    /// Appends a serial limb; returns the last link index.
    inline int add_limb(ModelBuilder & b, const std::string & prefix, int parent, const Vector3 & attach,
                        const std::vector<Vector3> & axes, const std::vector<Vector3> & offsets,
                        const std::vector<double> & masses)
    {
      int link = parent;
      for (std::size_t k = 0; k < axes.size(); ++k)
      {
        const Vector3 at = k == 0 ? attach : offsets[k - 1];
        const Vector3 seg = offsets[k];
        const double length = std::max(seg.norm(), 0.05);
        const SpatialInertia I = SpatialInertia::FromMassComInertia(
          masses[k], 0.5 * seg,
          Matrix3((masses[k] * length * length / 12.0 + 1e-3) * Matrix3::Identity()));
        link = b.add_link(prefix + std::to_string(k + 1), link, Joint::Revolute(axes[k]),
                          PlueckerTransform::Translation(at), I);
      }
      return link;
    }
  } // namespace detail

  /// 38-dof biped-shaped fixture: floating pelvis (6), two 6-dof legs, a
  /// 4-dof spine, two 7-dof arms off the chest and a 2-dof neck.
  inline Model generate_humanoid_like()
  {
    const Vector3 X = Vector3::UnitX();
    const Vector3 Y = Vector3::UnitY();
    const Vector3 Z = Vector3::UnitZ();
    ModelBuilder b("pelvis", BaseType::Floating, detail::box_inertia(8.0, Vector3::Zero(), Vector3(0.2, 0.3, 0.15)));

    for (int side : {1, -1})
    {
      const std::string name = side > 0 ? "left_leg" : "right_leg";
      detail::add_limb(b, name, 0, Vector3(0.0, 0.1 * side, -0.08), {Z, X, Y, Y, Y, X},
                       {Vector3(0, 0, -0.02), Vector3(0, 0, -0.02), Vector3(0, 0, -0.4), Vector3(0, 0, -0.4),
                        Vector3(0, 0, -0.02), Vector3(0.1, 0, -0.05)},
                       {0.5, 0.5, 4.0, 3.0, 0.3, 1.0});
    }
    const int chest = detail::add_limb(b, "spine", 0, Vector3(0, 0, 0.1), {Z, Y, X, Z},
                                       {Vector3(0, 0, 0.1), Vector3(0, 0, 0.1), Vector3(0, 0, 0.1), Vector3(0, 0, 0.15)},
                                       {2.0, 2.0, 2.0, 6.0});
    for (int side : {1, -1})
    {
      const std::string name = side > 0 ? "left_arm" : "right_arm";
      detail::add_limb(b, name, chest, Vector3(0.0, 0.18 * side, 0.12), {Y, X, Z, Y, Z, Y, X},
                       {Vector3(0, 0.02 * side, 0), Vector3(0, 0.02 * side, 0), Vector3(0, 0, -0.28),
                        Vector3(0, 0, -0.25), Vector3(0, 0, -0.02), Vector3(0, 0, -0.02), Vector3(0, 0, -0.08)},
                       {0.3, 0.3, 2.0, 1.5, 0.2, 0.2, 0.5});
    }
    detail::add_limb(b, "neck", chest, Vector3(0, 0, 0.2), {Z, Y}, {Vector3(0, 0, 0.05), Vector3(0, 0, 0.12)},
                     {0.5, 3.0});
    return b.build();
  }

  /// 18-dof quadruped-shaped fixture: floating trunk and four 3-dof legs
  /// (hip abduction, hip flexion, knee).
  inline Model generate_quadruped_like()
  {
    ModelBuilder b("trunk", BaseType::Floating, detail::box_inertia(12.0, Vector3::Zero(), Vector3(0.6, 0.3, 0.15)));
    const char * names[] = {"front_left", "front_right", "hind_left", "hind_right"};
    const Vector3 hips[] = {Vector3(0.3, 0.12, 0), Vector3(0.3, -0.12, 0), Vector3(-0.3, 0.12, 0),
                            Vector3(-0.3, -0.12, 0)};
    for (int k = 0; k < 4; ++k)
      detail::add_limb(b, names[k], 0, hips[k], {Vector3::UnitX(), Vector3::UnitY(), Vector3::UnitY()},
                       {Vector3(0, 0, -0.03), Vector3(0, 0, -0.25), Vector3(0, 0, -0.25)}, {0.6, 1.2, 0.3});
    return b.build();
  }

  /// Links without children.
  inline std::vector<int> leaf_links(const Model & model)
  {
    std::vector<int> leaves;
    for (int i = 0; i < model.n_links(); ++i)
      if (model.children[static_cast<std::size_t>(i)].empty())
        leaves.push_back(i);
    return leaves;
  }

} // namespace pvdyn
