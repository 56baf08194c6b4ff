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

#include <optional>
#include <utility>
#include <vector>

#include "pvdyn/model.hpp"

namespace pvdyn
{

  enum class DelassusKind
  {
    Explicit,     ///< holds Lambda = J M^-1 J^T
    DampedInverse ///< holds (Lambda + mu I)^-1
  };

  /// Constraint-space inverse inertia, either explicit or as its damped
  /// inverse. The explicit kind caches its Cholesky factor on first solve.
  class DelassusOperator
  {
  public:
    DelassusOperator() = default;

    static DelassusOperator Explicit(MatrixX lambda, std::vector<int> offsets = {})
    {
      DelassusOperator op;
      op.kind_ = DelassusKind::Explicit;
      op.matrix_ = std::move(lambda);
      op.offsets_ = std::move(offsets);
      return op;
    }

    static DelassusOperator DampedInverse(MatrixX inverse, double mu, std::vector<int> offsets = {})
    {
      DelassusOperator op;
      op.kind_ = DelassusKind::DampedInverse;
      op.matrix_ = std::move(inverse);
      op.mu_ = mu;
      op.offsets_ = std::move(offsets);
      return op;
    }

    DelassusKind kind() const { return kind_; }
    const MatrixX & matrix() const { return matrix_; }
    double mu() const { return mu_; }
    int m() const { return static_cast<int>(matrix_.rows()); }
    const std::vector<int> & offsets() const { return offsets_; }

    /// Number of factorizations performed so far (instrumentation).
    int factorizations() const { return factorizations_; }

    VectorX apply(const VectorX & rhs) const
    {
      check_rhs(rhs);
      flops::add(flops::gemv(static_cast<std::uint64_t>(m()), static_cast<std::uint64_t>(m())));
      return matrix_ * rhs;
    }

    /// Lambda^-1 rhs for the explicit kind; for the damped kind this is the
    /// damped solve X rhs.
    VectorX factor_solve(const VectorX & rhs) const
    {
      check_rhs(rhs);
      if (kind_ == DelassusKind::DampedInverse)
        return apply(rhs);
      if (!llt_)
      {
        ++factorizations_;
        flops::add(flops::cholesky(static_cast<std::uint64_t>(m())));
        llt_.emplace(matrix_);
        if (llt_->info() != Eigen::Success || (m() > 0 && llt_->rcond() < 1e-14))
        {
          llt_.reset();
          throw NotPositiveDefinite("Delassus matrix is singular; use a damped operator");
        }
      }
      flops::add(2 * flops::tri_solve(static_cast<std::uint64_t>(m()), 1));
      return llt_->solve(rhs);
    }

  private:
    void check_rhs(const VectorX & rhs) const
    {
      if (rhs.size() != m())
        throw DimensionMismatch("rhs has size " + std::to_string(rhs.size()) + ", operator is "
                                + std::to_string(m()) + "x" + std::to_string(m()));
    }

    DelassusKind kind_ = DelassusKind::Explicit;
    MatrixX matrix_;
    double mu_ = 0.0;
    std::vector<int> offsets_;
    mutable std::optional<Eigen::LLT<MatrixX>> llt_;
    mutable int factorizations_ = 0;
  };

  inline VectorX delassus_apply(const DelassusOperator & op, const VectorX & rhs) { return op.apply(rhs); }

  inline VectorX delassus_factor_solve(const DelassusOperator & op, const VectorX & rhs)
  {
    return op.factor_solve(rhs);
  }

} // namespace pvdyn
