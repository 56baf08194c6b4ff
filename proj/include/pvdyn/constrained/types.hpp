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

#include "pvdyn/model.hpp"

namespace pvdyn
{

  struct SolverSettings
  {
    double mu = 1e-5;         ///< proximal regularisation
    VectorX soft_R;           ///< per-row compliance for pv_soft_solve; empty means 1e-6 on every row
    double tol_primal = 1e-10;
    int max_iter = 50;

    void validate(int m) const
    {
      if (!(mu > 0.0))
        throw InvalidConstraint("mu must be positive");
      if (!(tol_primal > 0.0) || max_iter < 1)
        throw InvalidConstraint("tol_primal and max_iter must be positive");
      if (soft_R.size() != 0 && soft_R.size() != m)
        throw DimensionMismatch("soft_R has size " + std::to_string(soft_R.size()) + ", expected "
                                + std::to_string(m));
      if (soft_R.size() != 0 && !(soft_R.minCoeff() > 0.0))
        throw InvalidConstraint("soft_R entries must be positive");
    }
  };

  enum class SolveStatus
  {
    Converged,
    MaxIter,
    LeastSquares
  };

  inline const char * to_string(SolveStatus s)
  {
    switch (s)
    {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIter:
      return "max_iter";
    case SolveStatus::LeastSquares:
      return "least_squares";
    }
    return "?";
  }

  struct ConstrainedSolution
  {
    VectorX qdd;
    VectorX lambda;
    int iterations = 1;
    double primal_residual = 0.0; ///< ||J qdd - (a* - gamma)||
    SolveStatus status = SolveStatus::Converged;
  };

} // namespace pvdyn
