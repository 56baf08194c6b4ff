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

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pvdyn/baseline/dynamics.hpp"
#include "pvdyn/constrained/proximal.hpp"

namespace pvdyn
{

  enum class Scheme
  {
    SemiImplicitEuler,
    Rk4
  };

  struct IntegratorConfig
  {
    Scheme scheme = Scheme::SemiImplicitEuler;
    double dt = 1e-3;
    /// Used for anchored constraints that carry no gains of their own.
    BaumgarteGains baumgarte_default{};

    void validate() const
    {
      if (!(dt > 0.0))
        throw InvalidConstraint("dt must be positive");
      if (baumgarte_default.kp < 0.0 || baumgarte_default.kd < 0.0)
        throw InvalidConstraint("Baumgarte gains must be non-negative");
    }
  };

  enum class Solver
  {
    Aba,
    Pv,
    PvSoft,
    PvEarly,
    Caba
  };

  inline Solver parse_solver(std::string_view name)
  {
    if (name == "aba")
      return Solver::Aba;
    if (name == "pv")
      return Solver::Pv;
    if (name == "pv_soft")
      return Solver::PvSoft;
    if (name == "pv_early")
      return Solver::PvEarly;
    if (name == "caba")
      return Solver::Caba;
    throw UnknownAlgorithm("unknown solver '" + std::string(name) + "' (expected aba, pv, pv_soft, pv_early or caba)");
  }

  /// Records the current world pose of every constrained link as its
  /// position-level target, with `gains` where the constraint has none.
  inline void attach_anchors(const Model & model, const State & state, ConstraintSet & cs,
                             std::optional<BaumgarteGains> gains = std::nullopt)
  {
    KinematicsCache kin;
    position_kinematics(model, state.q, kin);
    for (int k = 0; k < cs.size(); ++k)
    {
      cs[k].anchor = kin.X_world[static_cast<std::size_t>(cs[k].link)];
      if (gains && !cs[k].baumgarte)
        cs[k].baumgarte = gains;
    }
  }

  /// Steps a state with one of the forward-dynamics solvers. Holds the
  /// solver workspace so that repeated steps do not reallocate.
  class Stepper
  {
  public:
    Stepper(const Model & model, const ConstraintSet & cs, Solver solver, IntegratorConfig config,
            SolverSettings settings = {})
      : model_(model), cs_(cs), solver_(solver), config_(config), settings_(settings), ws_(model, cs)
    {
      config_.validate();
      settings_.validate(cs.m());
      if (solver_ == Solver::Caba)
        settings_.tol_primal = std::min(settings_.tol_primal, 1e-10);
    }

    /// Generalised acceleration at (q, v), with Baumgarte feedback folded
    /// into the targets of anchored constraints.
    VectorX acceleration(const State & s, const VectorX & tau)
    {
      if (solver_ == Solver::Aba || cs_.empty())
        return aba(model_, s, tau);
      stabilised_ = cs_;
      bool any_anchor = false;
      for (const auto & c : cs_)
        any_anchor = any_anchor || c.anchor.has_value();
      if (any_anchor)
      {
        const KinematicsCache kin = forward_kinematics(model_, s);
        for (int k = 0; k < cs_.size(); ++k)
        {
          const MotionConstraint & c = cs_[k];
          if (!c.anchor)
            continue;
          const BaumgarteGains g = c.baumgarte.value_or(config_.baumgarte_default);
          const auto e = static_cast<std::size_t>(c.link);
          const Vector6 err = pose_error(kin.X_world[e], *c.anchor);
          stabilised_[k].a_star = c.a_star - c.K * (g.kp * err + g.kd * kin.v[e].vector());
        }
      }
      switch (solver_)
      {
      case Solver::Pv:
        return pv_solve(model_, s, tau, stabilised_, ws_).qdd;
      case Solver::PvEarly:
        return pv_early_solve(model_, s, tau, stabilised_, ws_).qdd;
      case Solver::PvSoft:
        return pv_soft_solve(model_, s, tau, stabilised_, settings_, ws_).qdd;
      case Solver::Caba:
        return constrained_aba(model_, s, tau, stabilised_, settings_, ws_).qdd;
      case Solver::Aba:
        break;
      }
      return aba(model_, s, tau);
    }

    State step(const State & s, const VectorX & tau)
    {
      const double dt = config_.dt;
      State out;
      if (config_.scheme == Scheme::SemiImplicitEuler)
      {
        out.v = s.v + dt * acceleration(s, tau);
        out.q = integrate(model_, s.q, dt * out.v);
        return out;
      }
      auto shifted = [&](const VectorX & dq, const VectorX & dv, double h) {
        return State{integrate(model_, s.q, h * dq), VectorX(s.v + h * dv)};
      };
      const VectorX a1 = acceleration(s, tau);
      const VectorX & v1 = s.v;
      const State s2 = shifted(v1, a1, 0.5 * dt);
      const VectorX a2 = acceleration(s2, tau);
      const State s3 = shifted(s2.v, a2, 0.5 * dt);
      const VectorX a3 = acceleration(s3, tau);
      const State s4 = shifted(s3.v, a3, dt);
      const VectorX a4 = acceleration(s4, tau);
      out.q = integrate(model_, s.q, (dt / 6.0) * (v1 + 2.0 * s2.v + 2.0 * s3.v + s4.v));
      out.v = s.v + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      return out;
    }

    const IntegratorConfig & config() const { return config_; }

  private:
    const Model & model_;
    ConstraintSet cs_;
    ConstraintSet stabilised_;
    Solver solver_;
    IntegratorConfig config_;
    SolverSettings settings_;
    PvWorkspace ws_;
  };

  inline State step(const Model & model, const State & state, const VectorX & tau, const ConstraintSet & cs,
                    std::string_view solver, const IntegratorConfig & config)
  {
    Stepper stepper(model, cs, parse_solver(solver), config);
    return stepper.step(state, tau);
  }

  /// States after each of `steps` steps, starting with the initial state.
  inline std::vector<State> rollout(const Model & model, const State & initial, const VectorX & tau,
                                    const ConstraintSet & cs, std::string_view solver, const IntegratorConfig & config,
                                    int steps)
  {
    check_state(model, initial);
    Stepper stepper(model, cs, parse_solver(solver), config);
    std::vector<State> traj;
    traj.reserve(static_cast<std::size_t>(steps) + 1);
    traj.push_back(initial);
    for (int k = 0; k < steps; ++k)
      traj.push_back(stepper.step(traj.back(), tau));
    return traj;
  }

  /// Kinetic plus gravitational potential energy.
  inline double total_energy(const Model & model, const State & state)
  {
    const MatrixX M = crba(model, state).matrix;
    double potential = 0.0;
    KinematicsCache kin;
    position_kinematics(model, state.q, kin);
    for (std::size_t i = 0; i < static_cast<std::size_t>(model.n_links()); ++i)
    {
      const SpatialInertia & I = model.inertias[i];
      if (I.mass <= 0.0)
        continue;
      const PlueckerTransform & X = kin.X_world[i];
      const Vector3 com_world = X.translation + X.rotation.transpose() * I.com();
      potential -= I.mass * model.gravity.dot(com_world);
    }
    return 0.5 * state.v.dot(M * state.v) + potential;
  }

} // namespace pvdyn
