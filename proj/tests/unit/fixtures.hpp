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

#include "pvdyn/pvdyn.hpp"

namespace pvdyn::testing
{

  inline constexpr double kPendulumIzz = 0.01;

  /// Unit mass, com 0.5 m along x, revolute about z, gravity along -y. When
  /// `with_tip` is set a massless link is welded at x = 1 m.
  inline Model pendulum(bool with_tip = false)
  {
    ModelBuilder b("world", BaseType::Fixed, SpatialInertia(0.0, Vector3::Zero(), Matrix3::Zero()));
    b.set_gravity(Vector3(0, -9.81, 0));
    b.add_link("rod", 0, Joint::Revolute(Vector3::UnitZ()), PlueckerTransform::Identity(),
               SpatialInertia::FromMassComInertia(1.0, Vector3(0.5, 0, 0),
                                                  Vector3(0.001, kPendulumIzz, kPendulumIzz).asDiagonal()));
    if (with_tip)
      b.add_link("tip", 1, Joint::Fixed(), PlueckerTransform::Translation(Vector3(1, 0, 0)),
                 SpatialInertia(0.0, Vector3::Zero(), Matrix3::Zero()));
    return b.build();
  }

  /// Three one-dof branches hanging off a fixed base.
  inline Model star()
  {
    ModelBuilder b("base", BaseType::Fixed, detail::rod_inertia(1.0, Vector3::Zero(), 0.5));
    for (int k = 0; k < 3; ++k)
      b.add_link("arm" + std::to_string(k), 0, Joint::Revolute(detail::cyclic_axis(k)),
                 PlueckerTransform::Translation(Vector3(0.3 * k, 0.1, 0)),
                 detail::rod_inertia(1.0, Vector3(0.25, 0, 0), 0.5));
    return b.build();
  }

  inline Model zero_gravity(Model m)
  {
    m.gravity.setZero();
    return m;
  }

  inline double rel_err(const VectorX & a, const VectorX & b) { return (a - b).norm() / (1.0 + b.norm()); }

} // namespace pvdyn::testing
