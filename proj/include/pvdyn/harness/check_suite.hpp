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

#include <chrono>
#include <cstdio>
#include <limits>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvdyn/baseline/kkt_oracle.hpp"
#include "pvdyn/constrained/proximal.hpp"
#include "pvdyn/delassus/osim.hpp"
#include "pvdyn/harness/instances.hpp"

namespace pvdyn
{

  struct CheckSizes
  {
    int feasible = 200;   ///< oracle-equivalence instances
    int soft = 100;       ///< per relaxation weight
    int delassus = 100;
    int degenerate = 50;
  };

  struct CheckOptions
  {
    std::uint64_t seed = 1;
    CheckSizes sizes{};
    detail::Mutation mutation = detail::Mutation::None; ///< for testing the suite itself
  };

  struct PropertyResult
  {
    std::string name;
    bool passed = true;
    double max_error = 0.0;
    double tolerance = 0.0;
    int cases = 0;
    std::string note; ///< first failure, if any
  };

  struct CheckReport
  {
    std::uint64_t seed = 0;
    std::vector<PropertyResult> properties;
    double seconds = 0.0;

    bool passed() const
    {
      for (const auto & p : properties)
        if (!p.passed)
          return false;
      return true;
    }

    const PropertyResult * find(const std::string & name) const
    {
      for (const auto & p : properties)
        if (p.name == name)
          return &p;
      return nullptr;
    }

    nlohmann::json to_json() const
    {
      nlohmann::json props = nlohmann::json::array();
      for (const auto & p : properties)
        props.push_back({{"name", p.name},
                         {"passed", p.passed},
                         {"max_error", p.max_error},
                         {"tolerance", p.tolerance},
                         {"cases", p.cases},
                         {"note", p.note}});
      return {{"seed", seed}, {"passed", passed()}, {"seconds", seconds}, {"properties", props}};
    }
  };

  namespace detail
  {
    class PropertyTracker
    {
    public:
      PropertyTracker(std::string name, double tol) { r_.name = std::move(name), r_.tolerance = tol; }

      void record(double err, const std::string & label)
      {
        ++r_.cases;
        const bool ok = std::isfinite(err) && err <= r_.tolerance;
        if (!std::isfinite(err) || err > r_.max_error)
          r_.max_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        if (!ok && r_.passed)
        {
          r_.passed = false;
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.3e", err);
          r_.note = label + ": error " + buf;
        }
      }

      void fail(const std::string & label)
      {
        ++r_.cases;
        if (r_.passed)
          r_.note = label;
        r_.passed = false;
        r_.max_error = std::numeric_limits<double>::infinity();
      }

      PropertyResult result() const { return r_; }

    private:
      PropertyResult r_;
    };

    inline double rel(const VectorX & x, const VectorX & ref) { return (x - ref).norm() / (1.0 + ref.norm()); }

    struct DenseProblem
    {
      MatrixX M, J;
      VectorX h, r, qdd_free;
    };

    inline DenseProblem dense_problem(const Instance & in)
    {
      DenseProblem d;
      d.M = crba(in.model, in.state).matrix;
      d.h = nonlinear_effects(in.model, in.state);
      const KinematicsCache kin = forward_kinematics(in.model, in.state);
      d.J = constraint_jacobian(in.model, kin, in.cs);
      d.r = in.cs.stacked_a_star() - constraint_drift(in.model, kin, in.cs);
      d.qdd_free = d.M.llt().solve(in.tau - d.h);
      return d;
    }

    inline MatrixX dense_delassus(const DenseProblem & d) { return d.J * d.M.llt().solve(d.J.transpose()); }

    /// Dense relaxed oracle: (M + J^T R^-1 J) qdd = tau - h + J^T R^-1 r.
    /// For small R the system is as ill-conditioned as R^-1, so it is solved
    /// in extended precision with one refinement step.
    inline VectorX dense_soft(const DenseProblem & d, const VectorX & tau, const VectorX & R)
    {
      using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
      using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
      const VecL Rinv = R.cast<long double>().cwiseInverse();
      const MatL J = d.J.cast<long double>();
      const MatL A = d.M.cast<long double>() + J.transpose() * Rinv.asDiagonal() * J;
      const VecL rhs = (tau - d.h).cast<long double>() + J.transpose() * (Rinv.asDiagonal() * d.r.cast<long double>());
      const Eigen::LLT<MatL> llt(A);
      VecL x = llt.solve(rhs);
      x += llt.solve(VecL(rhs - A * x));
      return x.cast<double>();
    }
  } // namespace detail

  /// Runs the oracle-equivalence properties on seeded random instances.
  inline CheckReport run_check_suite(const CheckOptions & opt = {})
  {
    const auto t0 = std::chrono::steady_clock::now();
    using detail::PropertyTracker;
    using detail::rel;
    CheckReport report;
    report.seed = opt.seed;
    const std::uint64_t base = opt.seed * 1000003ULL;

    PropertyTracker pv_q("pv_solve.qdd_vs_kkt", 1e-8), pv_l("pv_solve.lambda_vs_kkt", 1e-6);
    PropertyTracker ea_q("pv_early_solve.qdd_vs_kkt", 1e-8), ea_l("pv_early_solve.lambda_vs_kkt", 1e-6);
    PropertyTracker ca_q("constrained_aba.qdd_vs_kkt", 1e-8), ca_l("constrained_aba.lambda_vs_kkt", 1e-6);
    PropertyTracker agree("solvers_agree.qdd", 2e-8);
    PropertyTracker monotone("constrained_aba.residual_nonincreasing", 1e-12);
    PropertyTracker consist("pv_lambda_vs_delassus_solve", 1e-6);
    SolverSettings tight;
    tight.tol_primal = 1e-10;
    for (int k = 0; k < opt.sizes.feasible; ++k)
    {
      const Instance in = random_feasible_instance(base + static_cast<std::uint64_t>(k));
      const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
      PvWorkspace ws(in.model, in.cs);
      try
      {
        const auto pv = detail::pv_sweep(in.model, in.state, in.tau, in.cs, ws, false, opt.mutation);
        pv_q.record(rel(pv.qdd, o.qdd), in.label);
        pv_l.record(rel(pv.lambda, o.lambda), in.label);
        const auto ea = detail::pv_sweep(in.model, in.state, in.tau, in.cs, ws, true, opt.mutation);
        ea_q.record(rel(ea.qdd, o.qdd), in.label);
        ea_l.record(rel(ea.lambda, o.lambda), in.label);
        const auto ca = constrained_aba(in.model, in.state, in.tau, in.cs, tight, ws);
        ca_q.record(rel(ca.qdd, o.qdd), in.label);
        ca_l.record(rel(ca.lambda, o.lambda), in.label);
        agree.record(std::max({rel(pv.qdd, ca.qdd), rel(ea.qdd, ca.qdd), rel(pv.qdd, ea.qdd)}), in.label);

        // Residual history of the proximal iterations.
        double prev = std::numeric_limits<double>::infinity();
        double worst = 0.0;
        for (int it = 1; it <= std::min(ca.iterations, 12); ++it)
        {
          SolverSettings s = tight;
          s.max_iter = it;
          s.tol_primal = 1e-300;
          const double r = constrained_aba(in.model, in.state, in.tau, in.cs, s, ws).primal_residual;
          if (it > 1)
            worst = std::max(worst, (r - prev) / (1.0 + prev));
          prev = r;
        }
        monotone.record(worst, in.label);

        if (k < opt.sizes.delassus)
        {
          const detail::DenseProblem d = detail::dense_problem(in);
          const DelassusOperator op = pv_osim(in.model, in.state, in.cs, ws);
          const VectorX lam = delassus_factor_solve(op, VectorX(d.r - d.J * d.qdd_free));
          consist.record(rel(pv.lambda, lam), in.label);
        }
      }
      catch (const Error & e)
      {
        pv_q.fail(in.label + ": " + e.what());
      }
    }
    for (const auto * t : {&pv_q, &pv_l, &ea_q, &ea_l, &ca_q, &ca_l, &agree, &monotone, &consist})
      report.properties.push_back(t->result());

    // Relaxed constraints against the dense relaxed system.
    for (double R : {1e-2, 1e-6})
    {
      PropertyTracker soft("pv_soft_solve.qdd_vs_dense_R" + std::string(R == 1e-2 ? "1e-2" : "1e-6"), 1e-8);
      for (int k = 0; k < opt.sizes.soft; ++k)
      {
        const Instance in = random_feasible_instance(base + 7919ULL + static_cast<std::uint64_t>(k));
        PvWorkspace ws(in.model, in.cs);
        SolverSettings s;
        s.soft_R = VectorX::Constant(in.cs.m(), R);
        const auto sol = pv_soft_solve(in.model, in.state, in.tau, in.cs, s, ws);
        const detail::DenseProblem d = detail::dense_problem(in);
        soft.record(rel(sol.qdd, detail::dense_soft(d, in.tau, s.soft_R)), in.label);
      }
      report.properties.push_back(soft.result());
    }

    // Delassus algorithms against J M^-1 J^T.
    PropertyTracker osim("pv_osim_vs_dense", 1e-8), osimr("pv_osimr_vs_dense", 1e-8);
    PropertyTracker same("pv_osim_equals_pv_osimr", 1e-10), sym("pv_osim_symmetric_psd", 1e-10);
    std::vector<PropertyTracker> grading;
    const double mus[] = {1e-8, 1e-4, 1.0};
    for (double mu : mus)
      grading.emplace_back("caba_osim_grading_identity_mu" + std::string(mu == 1e-8 ? "1e-8" : mu == 1e-4 ? "1e-4" : "1"),
                           1e-8);
    for (int k = 0; k < opt.sizes.delassus; ++k)
    {
      const Instance in = random_feasible_instance(base + 15485863ULL + static_cast<std::uint64_t>(k));
      PvWorkspace ws(in.model, in.cs);
      const detail::DenseProblem d = detail::dense_problem(in);
      const MatrixX Ld = detail::dense_delassus(d);
      const MatrixX A = pv_osim(in.model, in.state, in.cs, ws).matrix();
      const MatrixX B = pv_osimr(in.model, in.state, in.cs, ws).matrix();
      const double scale = std::max(1.0, Ld.norm());
      osim.record((A - Ld).norm() / scale, in.label);
      osimr.record((B - Ld).norm() / scale, in.label);
      same.record((A - B).norm() / std::max(1.0, A.norm()), in.label);
      const double min_eig = Eigen::SelfAdjointEigenSolver<MatrixX>(A, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      sym.record(std::max((A - A.transpose()).norm(), -min_eig) / std::max(1.0, A.norm()), in.label);
      const MatrixX I = MatrixX::Identity(in.cs.m(), in.cs.m());
      for (std::size_t j = 0; j < grading.size(); ++j)
      {
        SolverSettings s;
        s.mu = mus[j];
        const MatrixX X = caba_osim(in.model, in.state, in.cs, s, ws).matrix();
        grading[j].record((X * (Ld + mus[j] * I) - I).norm(), in.label);
      }
    }
    for (const auto * t : {&osim, &osimr, &same, &sym})
      report.properties.push_back(t->result());
    for (const auto & t : grading)
      report.properties.push_back(t.result());

    // Rank-deficient and infeasible constraints.
    PropertyTracker dg_q("constrained_aba.degenerate_qdd_vs_pinv", 1e-6);
    PropertyTracker dg_f("constrained_aba.degenerate_force_vs_pinv", 1e-6);
    PropertyTracker dg_x("caba_osim.degenerate_vs_dense_damped", 1e-6);
    PropertyTracker dg_pv("pv_solve.raises_singular_dual", 0.0);
    for (int k = 0; k < opt.sizes.degenerate; ++k)
    {
      const Instance in = random_degenerate_instance(base + 32452843ULL + static_cast<std::uint64_t>(k));
      PvWorkspace ws(in.model, in.cs);
      const KktSolution o = kkt_oracle(in.model, in.state, in.tau, in.cs);
      const detail::DenseProblem d = detail::dense_problem(in);
      const SolverSettings s;
      const auto ca = constrained_aba(in.model, in.state, in.tau, in.cs, s, ws);
      const bool finite = ca.qdd.allFinite() && ca.lambda.allFinite();
      dg_q.record(finite ? rel(ca.qdd, o.qdd) : std::numeric_limits<double>::infinity(), in.label);
      dg_f.record(finite ? rel(VectorX(d.J.transpose() * ca.lambda), VectorX(d.J.transpose() * o.lambda))
                         : std::numeric_limits<double>::infinity(),
                  in.label);
      const MatrixX I = MatrixX::Identity(in.cs.m(), in.cs.m());
      const MatrixX Xd = (detail::dense_delassus(d) + s.mu * I).inverse();
      const MatrixX X = caba_osim(in.model, in.state, in.cs, s, ws).matrix();
      dg_x.record(X.allFinite() ? (X - Xd).norm() / Xd.norm() : std::numeric_limits<double>::infinity(), in.label);
      try
      {
        pv_solve(in.model, in.state, in.tau, in.cs, ws);
        dg_pv.fail(in.label + ": pv_solve returned instead of raising SingularDual");
      }
      catch (const SingularDual &)
      {
        dg_pv.record(0.0, in.label);
      }
    }
    for (const auto * t : {&dg_q, &dg_f, &dg_x, &dg_pv})
      report.properties.push_back(t->result());

    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
  }

} // namespace pvdyn
