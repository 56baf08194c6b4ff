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

/// Floating-point operation instrumentation.
///
/// Every algorithm in the library reports the multiply/add work it performs
/// through `flops::add`. Counts are per thread, so independent benchmark
/// workers do not interfere. The counts are analytic (one increment per
/// primitive, sized by the primitive's operand shapes), not sampled.
namespace pvdyn::flops
{

  inline thread_local std::uint64_t counter = 0;

  inline void add(std::uint64_t n) noexcept { counter += n; }

  inline std::uint64_t read() noexcept { return counter; }

  inline void reset() noexcept { counter = 0; }

  /// Counts the work done between construction and `elapsed()`.
  class Scope
  {
  public:
    Scope() noexcept : start_(counter) {}
    std::uint64_t elapsed() const noexcept { return counter - start_; }

  private:
    std::uint64_t start_;
  };

  // Dense kernel costs (multiplies + adds).
  constexpr std::uint64_t gemm(std::uint64_t r, std::uint64_t k, std::uint64_t c) noexcept
  {
    return r * c * (2 * k - (k > 0 ? 1 : 0));
  }
  constexpr std::uint64_t gemv(std::uint64_t r, std::uint64_t c) noexcept { return gemm(r, c, 1); }
  constexpr std::uint64_t cholesky(std::uint64_t n) noexcept { return n * n * n / 3 + n * n; }
  constexpr std::uint64_t lu(std::uint64_t n) noexcept { return 2 * n * n * n / 3 + n * n; }
  constexpr std::uint64_t tri_solve(std::uint64_t n, std::uint64_t rhs) noexcept { return n * n * rhs; }

} // namespace pvdyn::flops
