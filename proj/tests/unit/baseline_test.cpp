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

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace pvdyn
{
  namespace
  {
    using testing::pendulum;
    using testing::rel_err;
    using testing::zero_gravity;

    Model random_tree_model(std::uint64_t seed, int max_n)
    {
      std::mt19937_64 rng(seed);
      const int n = std::uniform_int_distribution<int>(2, max_n)(rng);
      const int b = std::uniform_int_distribution<int>(1, 4)(rng);
      if (seed % 2 == 0 || n <= 6)
        return generate_tree(n, b, seed);
      return generate_tree(n - 6, b, seed, BaseType::Floating);
    }

    // Inverse of M through an independent dense factorization.
    MatrixX dense_inverse(const MatrixX & M) { return M.partialPivLu().inverse(); }
  } // namespace

  TEST(Rnea, PendulumStatics)
  {
    const Model p = pendulum();
    const VectorX tau = rnea(p, neutral_state(p), VectorX::Zero(1));
    EXPECT_NEAR(tau[0], 1.0 * 9.81 * 0.5, 1e-12);
    EXPECT_NEAR(rnea(zero_gravity(p), neutral_state(p), VectorX::Zero(1))[0], 0.0, 0.0);
  }

  TEST(Rnea, AffineInAcceleration)
  {
    const Model m = generate_tree(30, 3, 1, BaseType::Floating);
    const State s = random_state(m, 1);
    std::mt19937_64 rng(1);
    const VectorX a1 = detail::random_vector(rng, m.nv);
    const VectorX a2 = detail::random_vector(rng, m.nv);
    const VectorX lhs = rnea(m, s, a1 + a2) + rnea(m, s, VectorX::Zero(m.nv));
    const VectorX rhs = rnea(m, s, a1) + rnea(m, s, a2);
    EXPECT_LT((lhs - rhs).norm(), 1e-10 * (1 + rhs.norm()));
    EXPECT_THROW(rnea(m, s, VectorX::Zero(3)), DimensionMismatch);
  }

  TEST(Rnea, ExternalForcesEnterThroughLinkJacobians)
  {
    const Model m = generate_tree(15, 2, 2);
    const State s = random_state(m, 2);
    std::mt19937_64 rng(2);
    std::vector<SpatialForce> f(static_cast<std::size_t>(m.n_links()));
    for (auto & fi : f)
      fi = SpatialForce(Vector6(detail::random_vector(rng, 6)));
    const VectorX qdd = detail::random_vector(rng, m.nv);
    const KinematicsCache k = forward_kinematics(m, s);
    VectorX expected = rnea(m, s, qdd);
    for (int i = 0; i < m.n_links(); ++i)
      expected -= link_jacobian(m, k, i).transpose() * f[static_cast<std::size_t>(i)].vector();
    EXPECT_LT((rnea(m, s, qdd, f) - expected).norm(), 1e-10 * (1 + expected.norm()));
    // aba accepts the same forces.
    EXPECT_LT((aba(m, s, rnea(m, s, qdd, f), f) - qdd).norm(), 1e-9 * (1 + qdd.norm()));
  }

  TEST(Crba, PendulumInertia)
  {
    const Model p = pendulum();
    const MassMatrix M = crba(p, random_state(p, 3));
    EXPECT_NEAR(M.matrix(0, 0), 1.0 * 0.5 * 0.5 + testing::kPendulumIzz, 1e-14);
  }

  TEST(Crba, MatchesRneaColumns)
  {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      const Model m = zero_gravity(random_tree_model(seed, 40));
      State s = random_state(m, seed);
      const MatrixX M = crba(m, s).matrix;
      s.v.setZero();
      const VectorX t0 = rnea(m, s, VectorX::Zero(m.nv));
      for (int j = 0; j < m.nv; ++j)
      {
        const VectorX col = rnea(m, s, VectorX::Unit(m.nv, j)) - t0;
        EXPECT_LT((M.col(j) - col).norm(), 1e-10 * (1 + col.norm()));
      }
      EXPECT_LT((M - M.transpose()).norm(), 1e-12 * M.norm());
    }
  }

  TEST(Crba, DisjointBranchesGiveExactZeros)
  {
    const Model m = testing::star();
    const MatrixX M = crba(m, random_state(m, 4)).matrix;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j)
          EXPECT_EQ(M(i, j), 0.0);
  }

  TEST(Aba, InversePairWithRnea)
  {
    for (std::uint64_t seed = 0; seed < 200; ++seed)
    {
      const Model m = random_tree_model(seed, 64);
      const State s = random_state(m, seed);
      std::mt19937_64 rng(seed);
      const VectorX tau = detail::random_vector(rng, m.nv, 5.0);
      const VectorX back = rnea(m, s, aba(m, s, tau));
      EXPECT_LT((back - tau).norm(), 1e-10 * (1 + tau.norm())) << "seed " << seed;
    }
  }

  TEST(Aba, MatchesDenseForwardDynamics)
  {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      const Model m = generate_tree(20, 1 + static_cast<int>(seed % 4), seed);
      const State s = random_state(m, seed);
      std::mt19937_64 rng(seed);
      const VectorX tau = detail::random_vector(rng, m.nv, 5.0);
      const VectorX dense = dense_inverse(crba(m, s).matrix) * (tau - nonlinear_effects(m, s));
      EXPECT_LT(rel_err(aba(m, s, tau), dense), 1e-9);
    }
  }

  TEST(Aba, FreeFall)
  {
    const Model m = generate_humanoid_like();
    State s = random_state(m, 8);
    s.v.setZero();
    const VectorX qdd = aba(m, s, VectorX::Zero(m.nv));
    const KinematicsCache k = forward_kinematics(m, s);
    const Vector3 g_body = k.X_world[0].rotation * m.gravity;
    EXPECT_LT(qdd.head<3>().norm(), 1e-12);
    EXPECT_LT((qdd.segment<3>(3) - g_body).norm(), 1e-12);
    // A spinning free body with its origin at the centre of mass: the
    // classical acceleration of the origin is still g.
    const Model body = ModelBuilder("body", BaseType::Floating,
                                    detail::box_inertia(2.0, Vector3::Zero(), Vector3(0.3, 0.2, 0.1)))
                         .build();
    const State r = random_state(body, 9);
    const VectorX a = aba(body, r, VectorX::Zero(6));
    const Vector3 w = r.v.head<3>();
    const Vector3 classical = a.segment<3>(3) + w.cross(Vector3(r.v.segment<3>(3)));
    EXPECT_LT((classical - forward_kinematics(body, r).X_world[0].rotation * body.gravity).norm(), 1e-12);
  }

  // The velocity-product part of h does no work: v^T (h - g) = 1/2 v^T Mdot v,
  // so the kinetic energy rate equals the power of tau - g along the motion.
  TEST(Aba, EnergyIdentity)
  {
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
      const Model m = random_tree_model(seed, 30);
      const State s = random_state(m, seed);
      std::mt19937_64 rng(seed);
      const VectorX tau = detail::random_vector(rng, m.nv, 5.0);
      const VectorX qdd = aba(m, s, tau);
      State still = s;
      still.v.setZero();
      const VectorX g = nonlinear_effects(m, still);
      const double h = 1e-6;
      State sp = s, sm = s;
      sp.q = integrate(m, s.q, h * s.v);
      sm.q = integrate(m, s.q, -h * s.v);
      sp.v = s.v + h * qdd;
      sm.v = s.v - h * qdd;
      const double Tp = 0.5 * sp.v.dot(crba(m, sp).matrix * sp.v);
      const double Tm = 0.5 * sm.v.dot(crba(m, sm).matrix * sm.v);
      const double rate = (Tp - Tm) / (2 * h);
      EXPECT_NEAR(rate, s.v.dot(tau - g), 1e-6 * (1 + std::abs(rate))) << "seed " << seed;
    }
  }

  TEST(Aba, SingularJointInertiaIsReported)
  {
    Model m = generate_chain(2);
    m.inertias[2] = SpatialInertia(1e-30, Vector3::Zero(), Matrix3::Zero());
    m.inertias[2].rot_inertia.setZero();
    m.joints[2].axis = Vector3::UnitZ();
    // A point mass on the axis has no inertia about it.
    EXPECT_THROW(aba(m, neutral_state(m), VectorX::Zero(2)), SingularJointInertia);
  }

  TEST(Ltl, ChainIsDenseLowerTriangular)
  {
    const Model m = generate_tree(3, 1, 21);
    const MassMatrix M = crba(m, random_state(m, 1));
    const LtlFactor F = ltl_factorize(M);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (j <= i)
          EXPECT_NE(F.L(i, j), 0.0);
        else
          EXPECT_EQ(F.L(i, j), 0.0);
  }

  TEST(Ltl, StarKeepsBranchZeros)
  {
    const Model m = testing::star();
    const LtlFactor F = ltl_factorize(crba(m, random_state(m, 2)));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j)
          EXPECT_EQ(F.L(i, j), 0.0);
  }

  TEST(Ltl, PatternEqualsAncestryAndReconstructs)
  {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      const Model m = random_tree_model(seed, 64);
      const MassMatrix M = crba(m, random_state(m, seed));
      const LtlFactor F = ltl_factorize(M);
      const double norm = M.matrix.lpNorm<Eigen::Infinity>();
      EXPECT_LE((F.L.transpose() * F.L - M.matrix).lpNorm<Eigen::Infinity>(), 1e-10 * norm);
      for (int i = 0; i < m.nv; ++i)
      {
        std::vector<bool> anc(static_cast<std::size_t>(m.nv), false);
        for (int j = i; j >= 0; j = M.dof_parents[static_cast<std::size_t>(j)])
          anc[static_cast<std::size_t>(j)] = true;
        for (int j = 0; j < m.nv; ++j)
          EXPECT_EQ(F.L(i, j) != 0.0, anc[static_cast<std::size_t>(j)]) << i << "," << j;
      }
      std::mt19937_64 rng(seed);
      const VectorX x = detail::random_vector(rng, m.nv);
      EXPECT_LT((ltl_solve(F, M.matrix * x) - x).norm(), 1e-9 * (1 + x.norm()));
    }
  }

  TEST(Ltl, RejectsIndefiniteMatrix)
  {
    MassMatrix M{MatrixX::Identity(2, 2), {-1, 0}};
    M.matrix(0, 0) = -1.0;
    EXPECT_THROW(ltl_factorize(M), NotPositiveDefinite);
  }

  TEST(LtlOsim, UnitRowAndDenseOracle)
  {
    const Model m = generate_tree(20, 3, 5, BaseType::Floating);
    const State s = random_state(m, 5);
    const MassMatrix M = crba(m, s);
    const MatrixX Minv = dense_inverse(M.matrix);
    const MatrixX e = MatrixX::Identity(m.nv, m.nv).row(9);
    EXPECT_NEAR(ltl_osim(M, e).matrix()(0, 0), Minv(9, 9), 1e-12);

    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      const Instance inst = random_feasible_instance(seed);
      const MassMatrix Mi = crba(inst.model, inst.state);
      const MatrixX J = constraint_jacobian(inst.model, forward_kinematics(inst.model, inst.state), inst.cs);
      const MatrixX dense = J * dense_inverse(Mi.matrix) * J.transpose();
      const MatrixX L = ltl_osim(Mi, J).matrix();
      EXPECT_LT((L - dense).norm(), 1e-9 * (1 + dense.norm())) << inst.label;
    }
    EXPECT_EQ(ltl_osim(M, MatrixX(0, m.nv)).m(), 0);
  }

  TEST(KktOracle, UnconstrainedReducesToAba)
  {
    const Model m = generate_tree(30, 2, 6, BaseType::Floating);
    const State s = random_state(m, 6);
    std::mt19937_64 rng(6);
    const VectorX tau = detail::random_vector(rng, m.nv);
    const KktSolution sol = kkt_oracle(m, s, tau, ConstraintSet{});
    EXPECT_LT(rel_err(sol.qdd, aba(m, s, tau)), 1e-10);
    EXPECT_EQ(sol.lambda.size(), 0);
  }

  TEST(KktOracle, PendulumTipHeldAgainstGravity)
  {
    const Model p = pendulum(true);
    const State s = neutral_state(p);
    ConstraintSet cs;
    cs.add(MotionConstraint::Point(2));
    const KktSolution sol = kkt_oracle(p, s, VectorX::Zero(1), cs);
    EXPECT_NEAR(sol.qdd[0], 0.0, 1e-12);
    const MatrixX J = constraint_jacobian(p, forward_kinematics(p, s), cs);
    const VectorX h = nonlinear_effects(p, s);
    EXPECT_LT((J.transpose() * sol.lambda - h).norm(), 1e-10);
    EXPECT_EQ(sol.rank, 1); // three rows, one dof
    EXPECT_FALSE(sol.full_rank);
  }

  TEST(KktOracle, ContradictoryRowsSplitTheResidual)
  {
    const Model p = pendulum(true);
    const State s = neutral_state(p);
    ConstraintSet cs;
    MotionConstraint a = MotionConstraint::Axes(2, 4, 1); // tip linear y
    MotionConstraint b = a;
    b.a_star[0] = 1.0;
    cs.add(a);
    cs.add(b);
    const KktSolution sol = kkt_oracle(p, s, VectorX::Zero(1), cs);
    EXPECT_EQ(sol.rank, 1);
    EXPECT_NEAR(sol.residual_primal[0], 0.5, 1e-12);
    EXPECT_NEAR(sol.residual_primal[1], -0.5, 1e-12);
    // Dual from the pseudoinverse of Lambda = [l l; l l]: equal split.
    EXPECT_NEAR(sol.lambda[0], sol.lambda[1], 1e-12);
    EXPECT_LT(sol.residual_dual.norm(), 1e-10);
  }

  TEST(KktOracle, FullRankResiduals)
  {
    for (std::uint64_t seed = 0; seed < 30; ++seed)
    {
      const Instance inst = random_feasible_instance(seed);
      const KktSolution sol = kkt_oracle(inst.model, inst.state, inst.tau, inst.cs);
      EXPECT_TRUE(sol.full_rank) << inst.label;
      EXPECT_LE(sol.residual_primal.norm(), 1e-8 * (1 + inst.cs.stacked_a_star().norm())) << inst.label;
      EXPECT_LE(sol.residual_dual.norm(), 1e-8 * (1 + inst.tau.norm())) << inst.label;
    }
  }

} // namespace pvdyn
