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

#include <cmath>
#include <vector>

#include "pvdyn/baseline/dynamics.hpp"
#include "pvdyn/delassus/operator.hpp"

namespace pvdyn
{

  /// M = L^T L with L lower triangular; L(i, j) != 0 only when dof j is i or
  /// an ancestor of i.
  struct LtlFactor
  {
    MatrixX L;
    std::vector<int> dof_parents;
  };

  /// Branch-sparse factorization, working in place along the dof ancestry
  /// so that no fill-in appears between different branches.
  inline LtlFactor ltl_factorize(const MassMatrix & M)
  {
    const auto n = static_cast<int>(M.matrix.rows());
    if (M.matrix.cols() != n || static_cast<int>(M.dof_parents.size()) != n)
      throw DimensionMismatch("mass matrix and ancestry table disagree");
    LtlFactor F{M.matrix, M.dof_parents};
    MatrixX & H = F.L;
    const auto & lambda = F.dof_parents;
    for (int k = n - 1; k >= 0; --k)
    {
      if (!(H(k, k) > 0.0))
        throw NotPositiveDefinite("mass matrix is not positive definite (pivot " + std::to_string(k) + ")");
      H(k, k) = std::sqrt(H(k, k));
      flops::add(1);
      for (int i = lambda[static_cast<std::size_t>(k)]; i >= 0; i = lambda[static_cast<std::size_t>(i)])
      {
        H(k, i) /= H(k, k);
        flops::add(1);
      }
      for (int i = lambda[static_cast<std::size_t>(k)]; i >= 0; i = lambda[static_cast<std::size_t>(i)])
        for (int j = i; j >= 0; j = lambda[static_cast<std::size_t>(j)])
        {
          H(i, j) -= H(k, i) * H(k, j);
          flops::add(2);
        }
    }
    // Keep only the ancestry pattern: the upper triangle still holds M.
    for (int i = 0; i < n; ++i)
    {
      std::vector<bool> anc(static_cast<std::size_t>(n), false);
      for (int j = i; j >= 0; j = lambda[static_cast<std::size_t>(j)])
        anc[static_cast<std::size_t>(j)] = true;
      for (int j = 0; j < n; ++j)
        if (!anc[static_cast<std::size_t>(j)])
          H(i, j) = 0.0;
    }
    return F;
  }

  namespace detail
  {
    /// x <- L^-T x, visiting only dofs that can be reached from nonzeros.
    inline void ltl_solve_transposed(const LtlFactor & F, VectorX & x)
    {
      const auto & lambda = F.dof_parents;
      for (auto i = static_cast<int>(x.size()) - 1; i >= 0; --i)
      {
        if (x[i] == 0.0)
          continue;
        x[i] /= F.L(i, i);
        flops::add(1);
        for (int j = lambda[static_cast<std::size_t>(i)]; j >= 0; j = lambda[static_cast<std::size_t>(j)])
        {
          x[j] -= F.L(i, j) * x[i];
          flops::add(2);
        }
      }
    }

    /// x <- L^-1 x.
    inline void ltl_solve_lower(const LtlFactor & F, VectorX & x)
    {
      const auto & lambda = F.dof_parents;
      for (int i = 0; i < x.size(); ++i)
      {
        for (int j = lambda[static_cast<std::size_t>(i)]; j >= 0; j = lambda[static_cast<std::size_t>(j)])
        {
          x[i] -= F.L(i, j) * x[j];
          flops::add(2);
        }
        x[i] /= F.L(i, i);
        flops::add(1);
      }
    }
  } // namespace detail

  /// M^-1 rhs using the two sparse triangular solves.
  inline VectorX ltl_solve(const LtlFactor & F, const VectorX & rhs)
  {
    if (rhs.size() != F.L.rows())
      throw DimensionMismatch("rhs has size " + std::to_string(rhs.size()) + ", expected "
                              + std::to_string(F.L.rows()));
    VectorX x = rhs;
    detail::ltl_solve_transposed(F, x);
    detail::ltl_solve_lower(F, x);
    return x;
  }

  /// Lambda = J M^-1 J^T = Y^T Y with Y = L^-T J^T. Columns of Y inherit the
  /// sparsity of the Jacobian rows, so each entry of Lambda only sums over
  /// the dofs both rows actually depend on.
  inline DelassusOperator ltl_osim(const LtlFactor & F, const MatrixX & J)
  {
    const auto n = F.L.rows();
    if (J.cols() != n)
      throw DimensionMismatch("Jacobian has " + std::to_string(J.cols()) + " columns, expected "
                              + std::to_string(n));
    const auto m = J.rows();
    MatrixX Y = J.transpose();
    std::vector<std::vector<int>> nz(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r)
    {
      VectorX y = Y.col(r);
      detail::ltl_solve_transposed(F, y);
      Y.col(r) = y;
      for (int i = 0; i < n; ++i)
        if (y[i] != 0.0)
          nz[static_cast<std::size_t>(r)].push_back(i);
    }
    MatrixX Lambda(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = a; b < m; ++b)
      {
        const auto & ia = nz[static_cast<std::size_t>(a)];
        const auto & ib = nz[static_cast<std::size_t>(b)];
        double s = 0.0;
        std::size_t p = 0, q = 0;
        std::uint64_t terms = 0;
        while (p < ia.size() && q < ib.size())
        {
          if (ia[p] < ib[q])
            ++p;
          else if (ib[q] < ia[p])
            ++q;
          else
          {
            s += Y(ia[p], a) * Y(ib[q], b);
            ++terms;
            ++p;
            ++q;
          }
        }
        flops::add(2 * terms);
        Lambda(a, b) = s;
        Lambda(b, a) = s;
      }
    return DelassusOperator::Explicit(std::move(Lambda));
  }

  inline DelassusOperator ltl_osim(const MassMatrix & M, const MatrixX & J)
  {
    return ltl_osim(ltl_factorize(M), J);
  }

} // namespace pvdyn
