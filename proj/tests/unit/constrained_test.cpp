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

    Instance humanoid_instance(int blocks, int rows, std::uint64_t seed)
    {
      Instance in;
      in.model = generate_humanoid_like();
      in.state = random_state(in.model, seed);
      std::mt19937_64 rng(seed);
      in.tau = detail::random_vector(rng, in.model.nv, 5.0);
      const std::vector<int> leaves = leaf_links(in.model);
      for (int k = 0; k < blocks; ++k)
      {
        MotionConstraint c = MotionConstraint::Axes(leaves[static_cast<std::size_t>(k)], 6 - rows, rows);
        c.a_star = detail::random_vector(rng, rows);
        in.cs.add(std::move(c));
      }
      return in;
    }

    // Linear velocity of a point fixed in the link: v + w x p.
    MotionConstraint point_at(int link, const Vector3 & p)
    {
      MotionConstraint c = MotionConstraint::Point(link);
      c.K.leftCols<3>() = -skew(p);
      return c;
    }

    // Shank links end 0.25 m below the knee; the knee origin itself does not
    // move with the knee joint.
    Instance quadruped_points(std::uint64_t seed, const Vector3 & offset)
    {
      Instance in;
      in.model = generate_quadruped_like();
      in.state = random_state(in.model, seed);
      std::mt19937_64 rng(seed);
      in.tau = detail::random_vector(rng, in.model.nv, 5.0);
      for (int leaf : leaf_links(in.model))
        in.cs.add(point_at(leaf, offset));
      return in;
    }
  } // namespace

  TEST(PvSolve, NoConstraintsIsAba)
  {
    const Model m = generate_tree(20, 3, 4, BaseType::Floating);
    const State s = random_state(m, 2);
    const VectorX tau = VectorX::LinSpaced(m.nv, -1.0, 2.0);
    PvWorkspace ws(m, ConstraintSet{});
    const ConstrainedSolution sol = pv_solve(m, s, tau, ConstraintSet{}, ws);
    EXPECT_LT((sol.qdd - aba(m, s, tau)).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_EQ(sol.lambda.size(), 0);
    EXPECT_EQ(sol.iterations, 1);
    EXPECT_EQ(sol.status, SolveStatus::Converged);
  }

  TEST(PvSolve, PendulumTipHeldAtRest)
  {
    // One dof: only the tangential row of the tip is independent.
    const Model p = pendulum(true);
    const State s = neutral_state(p);
    ConstraintSet cs;
    cs.add(MotionConstraint::Axes(2, 4, 1));
    PvWorkspace ws(p, cs);
    const ConstrainedSolution sol = pv_solve(p, s, VectorX::Zero(1), cs, ws);
    EXPECT_NEAR(sol.qdd[0], 0.0, 1e-12);
    // Gravity torque m g l = 0.5 * 9.81 balanced by a force at 1 m.
    const MatrixX J = constraint_jacobian(p, forward_kinematics(p, s), cs);
    EXPECT_NEAR((J.transpose() * sol.lambda)[0], nonlinear_effects(p, s)[0], 1e-12);
    EXPECT_NEAR(sol.lambda[0], 0.5 * 9.81, 1e-12);
    const KktSolution o = kkt_oracle(p, s, VectorX::Zero(1), cs);
    EXPECT_LT(rel_err(sol.lambda, o.lambda), 1e-12);
  }

  TEST(PvSolve, PendulumFullTipIsRankDeficient)
  {
    // Three rows on one dof: the dual block is singular, and the proximal
    // solver still returns the balanced state.
    const Model p = pendulum(true);
    const State s = neutral_state(p);
    ConstraintSet cs;
    cs.add(MotionConstraint::Point(2));
    PvWorkspace ws(p, cs);
    EXPECT_THROW(pv_solve(p, s, VectorX::Zero(1), cs, ws), SingularDual);
    const ConstrainedSolution sol = constrained_aba(p, s, VectorX::Zero(1), cs, SolverSettings{}, ws);
    EXPECT_NEAR(sol.qdd[0], 0.0, 1e-10);
    const MatrixX J = constraint_jacobian(p, forward_kinematics(p, s), cs);
    EXPECT_NEAR((J.transpose() * sol.lambda)[0], nonlinear_effects(p, s)[0], 1e-8);
  }

  TEST(PvSolve, HumanoidFourBlocksMatchesOracle)
  {
    const Instance in = humanoid_instance(4, 3, 11);
    PvWorkspace ws(in.model, in.cs);
    const ConstrainedSolution sol = pv_solve(in.model, in.state, in.tau, in.cs, ws);
    const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
    EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-8);
    EXPECT_LT(rel_err(sol.lambda, o.lambda), 1e-8);
    EXPECT_LT(sol.primal_residual, 1e-9);
    EXPECT_EQ(ws.stats.root_dual_dim, 12);
  }

  TEST(PvSolve, RandomInstancesMatchOracle)
  {
    for (std::uint64_t seed = 0; seed < 40; ++seed)
    {
      const Instance in = random_feasible_instance(seed);
      PvWorkspace ws(in.model, in.cs);
      const ConstrainedSolution sol = pv_solve(in.model, in.state, in.tau, in.cs, ws);
      const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
      EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-8) << in.label;
      EXPECT_LT(rel_err(sol.lambda, o.lambda), 1e-6) << in.label;
    }
  }

  TEST(PvSolve, DualBlockIsSymmetricPsd)
  {
    const Instance in = humanoid_instance(4, 6, 3);
    PvWorkspace ws(in.model, in.cs);
    pv_solve(in.model, in.state, in.tau, in.cs, ws);
    const int k = ws.sets[0].size();
    const MatrixX L = ws.sets[0].L.topLeftCorner(k, k);
    EXPECT_LT((L - L.transpose()).norm(), 1e-10 * L.norm());
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixX>(L).eigenvalues().minCoeff(), -1e-10 * L.norm());
  }

  TEST(PvSolve, WorkspaceIsReusableAndShapeChecked)
  {
    Instance in = random_feasible_instance(5);
    PvWorkspace ws(in.model, in.cs);
    const ConstrainedSolution a = pv_solve(in.model, in.state, in.tau, in.cs, ws);
    // New targets, same layout: the workspace is reused.
    in.cs[0].a_star.array() += 1.0;
    const ConstrainedSolution b = pv_solve(in.model, in.state, in.tau, in.cs, ws);
    const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
    EXPECT_LT(rel_err(b.qdd, o.qdd), 1e-8);
    EXPECT_GT((a.qdd - b.qdd).norm(), 1e-6);

    ConstraintSet other = in.cs;
    other.add(MotionConstraint::Axes(0, 0, 1));
    EXPECT_THROW(pv_solve(in.model, in.state, in.tau, other, ws), DimensionMismatch);
    EXPECT_THROW(pv_solve(in.model, in.state, VectorX::Zero(in.model.nv + 1), in.cs, ws), DimensionMismatch);
  }

  TEST(PvSolve, DependentRowsRaiseSingularDual)
  {
    for (std::uint64_t seed = 0; seed < 12; ++seed)
    {
      const Instance in = random_degenerate_instance(seed);
      PvWorkspace ws(in.model, in.cs);
      EXPECT_THROW(pv_solve(in.model, in.state, in.tau, in.cs, ws), SingularDual) << in.label;
      EXPECT_THROW(pv_early_solve(in.model, in.state, in.tau, in.cs, ws), SingularDual) << in.label;
    }
  }

  TEST(PvEarly, WeldOnChainTipMatchesPv)
  {
    const Model m = generate_chain(12);
    const State s = random_state(m, 8);
    const VectorX tau = VectorX::LinSpaced(m.nv, 1.0, -1.0);
    ConstraintSet cs;
    MotionConstraint w = MotionConstraint::Weld(m.n_links() - 1);
    w.a_star << 0.1, -0.2, 0.3, 0.5, 0.0, -1.0;
    cs.add(w);
    PvWorkspace ws(m, cs);
    const ConstrainedSolution pv = pv_solve(m, s, tau, cs, ws);
    const ConstrainedSolution early = pv_early_solve(m, s, tau, cs, ws);
    EXPECT_LT(rel_err(early.qdd, pv.qdd), 1e-10);
    EXPECT_LT(rel_err(early.lambda, pv.lambda), 1e-10);
    EXPECT_EQ(ws.stats.early_eliminations, 1);
    EXPECT_EQ(ws.stats.root_dual_dim, 0);
  }

  TEST(PvEarly, QuadrupedFeetEliminatedPerBranch)
  {
    const Instance in = quadruped_points(21, Vector3(0, 0, -0.25));
    PvWorkspace ws(in.model, in.cs);
    const ConstrainedSolution sol = pv_early_solve(in.model, in.state, in.tau, in.cs, ws);
    const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
    EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-8);
    EXPECT_LT(rel_err(sol.lambda, o.lambda), 1e-8);
    // No 12x12 system: every foot is solved within its own leg.
    EXPECT_EQ(ws.stats.early_eliminations, 4);
    EXPECT_EQ(ws.stats.root_dual_dim, 0);
    EXPECT_EQ(ws.stats.max_dual_dim, 3);
  }

  TEST(PvEarly, BaseCoupledRowsFallBackToRoot)
  {
    // Knee origins: two leg joints cannot hold three rows, so every block
    // waits for the base.
    const Instance in = quadruped_points(22, Vector3::Zero());
    PvWorkspace ws(in.model, in.cs);
    const ConstrainedSolution sol = pv_early_solve(in.model, in.state, in.tau, in.cs, ws);
    const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
    EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-8);
    EXPECT_LT(rel_err(sol.lambda, o.lambda), 1e-8);
    EXPECT_EQ(ws.stats.early_eliminations, 0);
    EXPECT_EQ(ws.stats.root_dual_dim, 12);
  }

  TEST(PvEarly, NoConstraintsIsAba)
  {
    const Model m = generate_humanoid_like();
    const State s = random_state(m, 1);
    const VectorX tau = VectorX::Ones(m.nv);
    PvWorkspace ws(m, ConstraintSet{});
    EXPECT_LT((pv_early_solve(m, s, tau, ConstraintSet{}, ws).qdd - aba(m, s, tau)).norm(), 1e-12);
  }

  TEST(PvEarly, RandomInstancesMatchOracle)
  {
    for (std::uint64_t seed = 100; seed < 140; ++seed)
    {
      const Instance in = random_feasible_instance(seed);
      PvWorkspace ws(in.model, in.cs);
      const ConstrainedSolution sol = pv_early_solve(in.model, in.state, in.tau, in.cs, ws);
      const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
      EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-8) << in.label;
      EXPECT_LT(rel_err(sol.lambda, o.lambda), 1e-6) << in.label;
    }
  }

  TEST(PvSoft, LargeComplianceApproachesAba)
  {
    const Instance in = humanoid_instance(4, 6, 5);
    PvWorkspace ws(in.model, in.cs);
    SolverSettings s;
    s.soft_R = VectorX::Constant(in.cs.m(), 1e12);
    const ConstrainedSolution sol = pv_soft_solve(in.model, in.state, in.tau, in.cs, s, ws);
    const VectorX free = aba(in.model, in.state, in.tau);
    EXPECT_LT((sol.qdd - free).norm(), 1e-6 * free.norm());
  }

  TEST(PvSoft, TinyComplianceApproachesPv)
  {
    // At R = 1e-12 the absorbed inertias are ~1e12 times the body ones and
    // the sweep loses about that factor over eps; the exact gap is far smaller.
    for (std::uint64_t seed = 0; seed < 50; ++seed)
    {
      const Instance in = random_feasible_instance(seed);
      PvWorkspace ws(in.model, in.cs);
      SolverSettings s;
      s.soft_R = VectorX::Constant(in.cs.m(), 1e-12);
      const ConstrainedSolution soft = pv_soft_solve(in.model, in.state, in.tau, in.cs, s, ws);
      const ConstrainedSolution pv = pv_solve(in.model, in.state, in.tau, in.cs, ws);
      EXPECT_LT(rel_err(soft.qdd, pv.qdd), 2e-3) << in.label;
    }
  }

  TEST(PvSoft, MatchesDenseRelaxedOracle)
  {
    for (std::uint64_t seed = 200; seed < 230; ++seed)
    {
      const Instance in = random_feasible_instance(seed);
      PvWorkspace ws(in.model, in.cs);
      SolverSettings s; // empty soft_R: 1e-6 on every row
      const ConstrainedSolution sol = pv_soft_solve(in.model, in.state, in.tau, in.cs, s, ws);
      const detail::DenseProblem d = detail::dense_problem(in);
      const VectorX ref = detail::dense_soft(d, in.tau, VectorX::Constant(in.cs.m(), 1e-6));
      EXPECT_LT(rel_err(sol.qdd, ref), 1e-8) << in.label;
      // lambda = R^-1 (a* - gamma - J qdd)
      EXPECT_LT(rel_err(sol.lambda, VectorX(1e6 * (d.r - d.J * sol.qdd))), 1e-8) << in.label;
    }
  }

  TEST(PvSoft, ConvergesMonotonicallyToPv)
  {
    // Below R ~ 1e-7 roundoff of order eps / R overtakes the O(R) gap.
    for (std::uint64_t seed = 0; seed < 30; ++seed)
    {
      const Instance in = random_feasible_instance(seed + 60);
      PvWorkspace ws(in.model, in.cs);
      const VectorX exact = pv_solve(in.model, in.state, in.tau, in.cs, ws).qdd;
      double prev = std::numeric_limits<double>::infinity();
      for (double R : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6})
      {
        SolverSettings s;
        s.soft_R = VectorX::Constant(in.cs.m(), R);
        const double gap = (pv_soft_solve(in.model, in.state, in.tau, in.cs, s, ws).qdd - exact).norm();
        EXPECT_LT(gap, prev) << in.label << " R = " << R;
        prev = gap;
      }
    }
  }

  TEST(PvSoft, RejectsBadWeights)
  {
    const Instance in = random_feasible_instance(1);
    PvWorkspace ws(in.model, in.cs);
    SolverSettings s;
    s.soft_R = VectorX::Constant(in.cs.m() + 1, 1.0);
    EXPECT_THROW(pv_soft_solve(in.model, in.state, in.tau, in.cs, s, ws), DimensionMismatch);
    s.soft_R = VectorX::Zero(in.cs.m());
    EXPECT_THROW(pv_soft_solve(in.model, in.state, in.tau, in.cs, s, ws), InvalidConstraint);
  }

  TEST(ConstrainedAba, FeasibleConvergesQuickly)
  {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      const Instance in = random_feasible_instance(seed);
      PvWorkspace ws(in.model, in.cs);
      SolverSettings s;
      s.mu = 1e-6;
      const ConstrainedSolution sol = constrained_aba(in.model, in.state, in.tau, in.cs, s, ws);
      const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
      EXPECT_EQ(sol.status, SolveStatus::Converged) << in.label;
      EXPECT_LE(sol.iterations, 10) << in.label;
      EXPECT_LE(sol.primal_residual, s.tol_primal) << in.label;
      EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-8) << in.label;
    }
  }

  TEST(ConstrainedAba, ContradictoryRowsGiveLeastSquares)
  {
    const Model m = generate_chain(5);
    const State s = random_state(m, 4);
    const VectorX tau = VectorX::Zero(m.nv);
    ConstraintSet cs;
    MotionConstraint a = MotionConstraint::Axes(m.n_links() - 1, 5, 1);
    MotionConstraint b = a;
    a.a_star << 0.0;
    b.a_star << 1.0;
    cs.add(a);
    cs.add(b);
    PvWorkspace ws(m, cs);
    const ConstrainedSolution sol = constrained_aba(m, s, tau, cs, SolverSettings{}, ws);
    const KktSolution o = kkt_oracle(m, s, tau, cs);
    EXPECT_EQ(sol.status, SolveStatus::LeastSquares);
    EXPECT_TRUE(sol.qdd.allFinite());
    EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-6);
    // Each row misses its target by half the gap.
    EXPECT_NEAR(sol.primal_residual, std::sqrt(0.5), 1e-6);
    // The generalised constraint force is unique even though lambda is not.
    const MatrixX J = constraint_jacobian(m, forward_kinematics(m, s), cs);
    EXPECT_LT(rel_err(VectorX(J.transpose() * sol.lambda), VectorX(J.transpose() * o.lambda)), 1e-6);
  }

  TEST(ConstrainedAba, DegenerateInstancesMatchPseudoinverse)
  {
    for (std::uint64_t seed = 0; seed < 15; ++seed)
    {
      const Instance in = random_degenerate_instance(seed);
      PvWorkspace ws(in.model, in.cs);
      const ConstrainedSolution sol = constrained_aba(in.model, in.state, in.tau, in.cs, SolverSettings{}, ws);
      const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
      EXPECT_TRUE(sol.qdd.allFinite() && sol.lambda.allFinite()) << in.label;
      EXPECT_LT(rel_err(sol.qdd, o.qdd), 1e-6) << in.label;
      if (seed % 3 == 0) // consistent duplicates: the iterates stay on the minimum-norm multiplier
      {
        EXPECT_LT(rel_err(sol.lambda, o.lambda), 1e-6) << in.label;
      }
    }
  }

  TEST(ConstrainedAba, NoConstraintsIsOneSweep)
  {
    const Model m = generate_tree(30, 2, 9);
    const State s = random_state(m, 9);
    const VectorX tau = VectorX::Ones(m.nv);
    PvWorkspace ws(m, ConstraintSet{});
    const ConstrainedSolution sol = constrained_aba(m, s, tau, ConstraintSet{}, SolverSettings{}, ws);
    EXPECT_EQ(sol.iterations, 1);
    EXPECT_LT((sol.qdd - aba(m, s, tau)).norm(), 1e-12);
  }

  TEST(ConstrainedAba, ResidualNonIncreasing)
  {
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
      const Instance in = random_feasible_instance(seed + 500);
      PvWorkspace ws(in.model, in.cs);
      double prev = std::numeric_limits<double>::infinity();
      for (int it = 1; it <= 8; ++it)
      {
        SolverSettings s;
        s.max_iter = it;
        s.tol_primal = 1e-300;
        const double r = constrained_aba(in.model, in.state, in.tau, in.cs, s, ws).primal_residual;
        if (it > 1)
        {
          EXPECT_LE(r, prev + 1e-12) << in.label << " iteration " << it;
        }
        prev = r;
      }
    }
  }

  TEST(ConstrainedAba, FlopsAffineInChainLength)
  {
    std::vector<double> n, f;
    for (int size : {16, 32, 64, 128, 256, 512})
    {
      const Model m = generate_chain(size);
      const State s = random_state(m, 1);
      const VectorX tau = VectorX::Zero(m.nv);
      const ConstraintSet cs = benchmark_constraints(m, 6);
      PvWorkspace ws(m, cs);
      SolverSettings st;
      st.max_iter = 3;
      st.tol_primal = 1e-300; // fixed iteration count
      const flops::Scope scope;
      constrained_aba(m, s, tau, cs, st, ws);
      n.push_back(size);
      f.push_back(static_cast<double>(scope.elapsed()));
    }
    // Linear least-squares fit f = a + b n.
    Eigen::MatrixXd A(static_cast<Eigen::Index>(n.size()), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n.size()));
    for (std::size_t k = 0; k < n.size(); ++k)
    {
      A(static_cast<Eigen::Index>(k), 0) = 1.0;
      A(static_cast<Eigen::Index>(k), 1) = n[k];
      y(static_cast<Eigen::Index>(k)) = f[k];
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd resid = A * coef - y;
    for (Eigen::Index k = 0; k < y.size(); ++k)
      EXPECT_LT(std::abs(resid(k)) / y(k), 0.05);
  }

  TEST(SolverSettings, RejectsNonPositiveValues)
  {
    SolverSettings s;
    s.mu = 0.0;
    EXPECT_THROW(s.validate(0), InvalidConstraint);
    s = SolverSettings{};
    s.max_iter = 0;
    EXPECT_THROW(s.validate(0), InvalidConstraint);
    EXPECT_STREQ(to_string(SolveStatus::LeastSquares), "least_squares");
  }

} // namespace pvdyn
