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

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "pvdyn/baseline/dynamics.hpp"

namespace pvdyn
{

  struct KktSolution
  {
    VectorX qdd;
    VectorX lambda;
    VectorX residual_primal; ///< J qdd - (a* - gamma)
    VectorX residual_dual;   ///< M qdd - (tau - h) - J^T lambda
    int rank = 0;            ///< row rank of J as seen by the oracle
    bool full_rank = true;
  };

  /// Dense reference for the equality-constrained dynamics
  ///   M qdd = tau - h + J^T lambda,  J qdd = a* - gamma.
  /// Full row rank J goes through the dense KKT matrix. Otherwise qdd is the
  /// least-squares solution in the M-metric and lambda the minimum-norm
  /// multiplier from the pseudoinverse of J M^-1 J^T.
  inline KktSolution kkt_oracle(const Model & model, const State & state, const VectorX & tau,
                                const ConstraintSet & cs)
  {
    check_state(model, state);
    if (tau.size() != model.nv)
      throw DimensionMismatch("tau has size " + std::to_string(tau.size()) + ", expected "
                              + std::to_string(model.nv));
    cs.validate(model);
    const int n = model.nv;
    const int m = cs.m();

    const MatrixX M = crba(model, state).matrix;
    const VectorX h = nonlinear_effects(model, state);
    const KinematicsCache kin = forward_kinematics(model, state);
    const MatrixX J = constraint_jacobian(model, kin, cs);
    const VectorX r = m > 0 ? VectorX(cs.stacked_a_star() - constraint_drift(model, kin, cs)) : VectorX(0);
    const VectorX f = tau - h;

    KktSolution out;
    out.rank = 0;
    if (m == 0)
    {
      flops::add(flops::cholesky(static_cast<std::uint64_t>(n)) + 2 * flops::tri_solve(static_cast<std::uint64_t>(n), 1));
      out.qdd = M.llt().solve(f);
      out.lambda = VectorX(0);
    }
    else
    {
      Eigen::ColPivHouseholderQR<MatrixX> qr(J.transpose());
      qr.setThreshold(1e-10);
      out.rank = static_cast<int>(qr.rank());
      out.full_rank = out.rank == m;
      if (out.full_rank)
      {
        MatrixX K = MatrixX::Zero(n + m, n + m);
        K.topLeftCorner(n, n) = M;
        K.topRightCorner(n, m) = J.transpose();
        K.bottomLeftCorner(m, n) = J;
        VectorX rhs(n + m);
        rhs << f, r;
        flops::add(flops::lu(static_cast<std::uint64_t>(n + m)) + 2 * flops::tri_solve(static_cast<std::uint64_t>(n + m), 1));
        const VectorX sol = K.partialPivLu().solve(rhs);
        out.qdd = sol.head(n);
        out.lambda = -sol.tail(m);
      }
      else
      {
        const Eigen::LLT<MatrixX> llt(M);
        const VectorX qdd_free = llt.solve(f);
        const MatrixX MinvJt = llt.solve(J.transpose());
        MatrixX Lambda = J * MinvJt;
        Lambda = 0.5 * (Lambda + Lambda.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixX> eig(Lambda);
        const VectorX & ev = eig.eigenvalues();
        const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
        VectorX inv = VectorX::Zero(m);
        for (int k = 0; k < m; ++k)
          if (ev[k] > cutoff)
            inv[k] = 1.0 / ev[k];
        const MatrixX pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
        out.lambda = pinv * (r - J * qdd_free);
        out.qdd = qdd_free + MinvJt * out.lambda;
      }
    }
    out.residual_primal = m > 0 ? VectorX(J * out.qdd - r) : VectorX(0);
    out.residual_dual = M * out.qdd - f - (m > 0 ? VectorX(J.transpose() * out.lambda) : VectorX::Zero(n));
    return out;
  }

} // namespace pvdyn
