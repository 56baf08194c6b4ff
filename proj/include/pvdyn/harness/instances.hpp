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

#include <Eigen/QR>
#include <Eigen/SVD>

#include "pvdyn/generators.hpp"
#include "pvdyn/kinematics.hpp"

// Seeded problem instances for the check suite, the tests and the benchmarks.
namespace pvdyn
{

  struct Instance
  {
    Model model;
    State state;
    VectorX tau;
    ConstraintSet cs;
    std::string label;
  };

  namespace detail
  {
    inline Matrix6 random_orthogonal(std::mt19937_64 & rng)
    {
      std::normal_distribution<double> g(0.0, 1.0);
      Matrix6 A;
      for (int i = 0; i < 36; ++i)
        A(i) = g(rng);
      return Eigen::HouseholderQR<Matrix6>(A).householderQ() * Matrix6::Identity();
    }

    inline VectorX random_vector(std::mt19937_64 & rng, Eigen::Index n, double scale = 1.0)
    {
      std::uniform_real_distribution<double> u(-scale, scale);
      VectorX v(n);
      for (Eigen::Index i = 0; i < n; ++i)
        v[i] = u(rng);
      return v;
    }

    inline Model random_model(std::mt19937_64 & rng, int max_n)
    {
      std::uniform_int_distribution<int> family(0, 5);
      std::uniform_int_distribution<std::uint64_t> seed;
      switch (family(rng))
      {
      case 0:
        return generate_chain(std::uniform_int_distribution<int>(3, std::min(max_n, 40))(rng));
      case 1:
        return generate_tree(std::uniform_int_distribution<int>(4, max_n)(rng),
                             std::uniform_int_distribution<int>(1, 4)(rng), seed(rng));
      case 2:
        return generate_tree(std::uniform_int_distribution<int>(4, max_n - 6)(rng),
                             std::uniform_int_distribution<int>(2, 4)(rng), seed(rng), BaseType::Floating);
      case 3:
        return generate_humanoid_like();
      case 4:
        return generate_quadruped_like();
      default:
        return generate_tree(std::uniform_int_distribution<int>(6, max_n)(rng), 2, seed(rng), BaseType::Fixed);
      }
    }

    inline double jacobian_conditioning(const Model & model, const State & state, const ConstraintSet & cs)
    {
      KinematicsCache kin;
      position_kinematics(model, state.q, kin);
      const MatrixX J = constraint_jacobian(model, kin, cs);
      const Eigen::JacobiSVD<MatrixX> svd(J);
      const VectorX & s = svd.singularValues();
      return s.size() == 0 ? 1.0 : s[s.size() - 1] / s[0];
    }
  } // namespace detail

  /// Random constraint rows on links of `model`: blocks of 1..6 rows taken
  /// from random orthogonal bases, up to `m` rows in total.
  inline ConstraintSet random_constraints(const Model & model, int m, std::mt19937_64 & rng)
  {
    ConstraintSet cs;
    const int first = model.base_type() == BaseType::Floating ? 0 : 1;
    std::uniform_int_distribution<int> link(first, model.n_links() - 1);
    while (cs.m() < m)
    {
      const int rows = std::min(std::uniform_int_distribution<int>(1, 6)(rng), m - cs.m());
      MotionConstraint c;
      c.link = link(rng);
      c.K = detail::random_orthogonal(rng).topRows(rows);
      c.a_star = detail::random_vector(rng, rows);
      cs.add(std::move(c));
    }
    return cs;
  }

  /// Random feasible instance with a well-conditioned, full row rank
  /// constraint Jacobian (sigma_min / sigma_max >= 1e-3).
  inline Instance random_feasible_instance(std::uint64_t seed, int max_n = 64, int max_m = 12)
  {
    std::mt19937_64 rng(seed);
    for (;;)
    {
      Instance inst;
      inst.model = detail::random_model(rng, max_n);
      if (inst.model.nv > max_n)
        continue;
      inst.state = random_state(inst.model, rng());
      inst.tau = detail::random_vector(rng, inst.model.nv, 5.0);
      const int m = std::uniform_int_distribution<int>(1, std::min(max_m, inst.model.nv - 1))(rng);
      for (int attempt = 0; attempt < 20; ++attempt)
      {
        inst.cs = random_constraints(inst.model, m, rng);
        if (detail::jacobian_conditioning(inst.model, inst.state, inst.cs) >= 1e-3)
        {
          inst.label = "feasible seed " + std::to_string(seed) + " n=" + std::to_string(inst.model.nv)
                       + " m=" + std::to_string(m);
          return inst;
        }
      }
    }
  }

  /// Rank-deficient or infeasible instance. Cycles through duplicated
  /// consistent rows, contradictory duplicates, and more rows than the
  /// constrained link has ancestor dofs.
  inline Instance random_degenerate_instance(std::uint64_t seed)
  {
    std::mt19937_64 rng(seed);
    Instance inst;
    const int kind = static_cast<int>(seed % 3);
    inst.model = kind == 2 ? generate_chain(std::uniform_int_distribution<int>(2, 4)(rng))
                           : detail::random_model(rng, 40);
    inst.state = random_state(inst.model, rng());
    inst.tau = detail::random_vector(rng, inst.model.nv, 5.0);
    switch (kind)
    {
    case 0: // a block repeated verbatim: rank deficient, still consistent
    case 1: // repeated with a different target: infeasible
    {
      inst.cs = random_constraints(inst.model, std::uniform_int_distribution<int>(1, 6)(rng), rng);
      MotionConstraint dup = inst.cs[0];
      if (kind == 1)
        dup.a_star += detail::random_vector(rng, dup.dim()) + VectorX::Constant(dup.dim(), 1.0);
      inst.cs.add(std::move(dup));
      inst.label = std::string(kind == 0 ? "duplicated" : "contradictory") + " seed " + std::to_string(seed);
      break;
    }
    default: // weld on a short fixed-base chain: more rows than dofs
    {
      MotionConstraint weld = MotionConstraint::Weld(inst.model.n_links() - 1);
      weld.a_star = detail::random_vector(rng, 6);
      inst.cs.add(std::move(weld));
      inst.label = "overconstrained seed " + std::to_string(seed);
      break;
    }
    }
    return inst;
  }

  /// Constraint layout used by the benchmarks: 6-D welds on leaves, the
  /// remainder as a partial block on the next one.
  inline ConstraintSet benchmark_constraints(const Model & model, int m)
  {
    ConstraintSet cs;
    std::vector<int> leaves = leaf_links(model);
    std::size_t k = 0;
    while (cs.m() < m)
    {
      const int rows = std::min(6, m - cs.m());
      // Once every leaf is used, move a few links towards the root so that
      // the blocks stay independent.
      int link = leaves[k % leaves.size()];
      for (std::size_t up = 0; up < 3 * (k / leaves.size()) && model.parents[static_cast<std::size_t>(link)] > 0; ++up)
        link = model.parents[static_cast<std::size_t>(link)];
      cs.add(MotionConstraint::Axes(link, 6 - rows, rows));
      ++k;
    }
    return cs;
  }

} // namespace pvdyn
