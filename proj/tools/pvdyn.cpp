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


// Command-line front end: check, bench, rollout, info.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pvdyn/pvdyn.hpp"

namespace
{

  constexpr int kOk = 0;
  constexpr int kCheckFailed = 1;
  constexpr int kUsage = 2;

  bool ends_with(const std::string & s, const std::string & suffix)
  {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  }

  std::vector<std::string> split(const std::string & s, char sep)
  {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);)
      if (!item.empty())
        out.push_back(item);
    return out;
  }

  void write_text(const std::string & path, const std::string & text)
  {
    std::ofstream f(path);
    if (!f || !(f << text))
      throw pvdyn::IoError("cannot write '" + path + "'");
  }

  int cmd_check(std::uint64_t seed, int instances, const std::string & out)
  {
    pvdyn::CheckOptions opt;
    opt.seed = seed;
    if (instances > 0)
      opt.sizes = {instances, std::max(1, instances / 2), std::max(1, instances / 2), std::max(1, instances / 4)};
    const pvdyn::CheckReport report = pvdyn::run_check_suite(opt);
    for (const auto & p : report.properties)
      std::printf("%-4s %-45s max_error %.3e  tol %.1e  cases %d%s%s\n", p.passed ? "ok" : "FAIL", p.name.c_str(),
                  p.max_error, p.tolerance, p.cases, p.note.empty() ? "" : "  ", p.note.c_str());
    if (!out.empty())
      write_text(out, report.to_json().dump(2) + "\n");
    std::printf("%s (%.1f s)\n", report.passed() ? "all properties passed" : "some properties failed",
                report.seconds);
    return report.passed() ? kOk : kCheckFailed;
  }

  int cmd_bench(const std::string & model, const std::string & solvers, int m, int reps, std::uint64_t seed,
                const std::string & out)
  {
    pvdyn::BenchSpec spec;
    spec.algorithms = split(solvers, ',');
    spec.m = m;
    spec.reps = reps;
    spec.seed = seed;
    // "chain:64,128" and "tree:64,128:2" sweep several sizes.
    if (model.rfind("chain:", 0) == 0 || model.rfind("tree:", 0) == 0)
    {
      const auto parts = split(model, ':');
      if (parts.size() < 2 || (parts[0] == "tree" && parts.size() != 3))
        throw pvdyn::ModelLoadError("bad model spec '" + model + "'");
      spec.family = parts[0];
      spec.sizes.clear();
      for (const auto & s : split(parts[1], ','))
        spec.sizes.push_back(std::stoi(s));
      if (parts[0] == "tree")
        spec.branching = std::stoi(parts[2]);
    }
    else
      spec.family = model;
    const auto records = pvdyn::run_bench(spec);
    std::printf("%-10s %6s %4s %4s %12s %12s %12s %12s\n", "algorithm", "n", "m", "d", "mean_ns", "std_ns", "min_ns",
                "flops");
    for (const auto & r : records)
      std::printf("%-10s %6d %4d %4d %12.0f %12.0f %12.0f %12llu\n", r.algorithm.c_str(), r.n, r.m, r.d, r.mean_ns,
                  r.std_ns, r.min_ns, static_cast<unsigned long long>(r.flops));
    if (!out.empty())
    {
      if (ends_with(out, ".json"))
        pvdyn::emit_json(records, out);
      else
        pvdyn::emit_csv(records, out);
    }
    return kOk;
  }

  int cmd_rollout(const std::string & model_spec, const std::string & solver, int m, double dt, int steps,
                  std::uint64_t seed, const std::string & scheme, const std::string & out)
  {
    const pvdyn::Model model = pvdyn::model_from_spec(model_spec, seed);
    // Seeded pose at rest: straight neutral chains are singular for tip constraints.
    pvdyn::State s = pvdyn::random_state(model, seed);
    s.v.setZero();
    pvdyn::ConstraintSet cs = m > 0 ? pvdyn::benchmark_constraints(model, m) : pvdyn::ConstraintSet{};
    pvdyn::attach_anchors(model, s, cs, pvdyn::BaumgarteGains{10.0, 100.0});
    pvdyn::IntegratorConfig cfg;
    cfg.dt = dt;
    if (scheme == "rk4")
      cfg.scheme = pvdyn::Scheme::Rk4;
    else if (scheme != "euler")
      throw CLI::ValidationError("--scheme", "expected euler or rk4");
    const pvdyn::VectorX tau = pvdyn::VectorX::Zero(model.nv);
    const auto traj = pvdyn::rollout(model, s, tau, cs, solver, cfg, steps);

    double drift = 0.0;
    pvdyn::KinematicsCache kin;
    pvdyn::position_kinematics(model, traj.back().q, kin);
    for (const auto & c : cs)
      if (c.anchor)
        drift = std::max(drift, pvdyn::pose_error(kin.X_world[static_cast<std::size_t>(c.link)], *c.anchor)
                                  .tail<3>()
                                  .norm());
    std::printf("model %s: nv %d, %d constraint rows, %d steps of %g s (%s, %s)\n", model_spec.c_str(), model.nv,
                cs.m(), steps, dt, solver.c_str(), scheme.c_str());
    std::printf("energy %.9g -> %.9g, max anchor drift %.3e m\n", pvdyn::total_energy(model, traj.front()),
                pvdyn::total_energy(model, traj.back()), drift);

    if (!out.empty())
    {
      std::ostringstream o;
      o.precision(17);
      if (ends_with(out, ".json"))
      {
        nlohmann::json j = nlohmann::json::array();
        for (std::size_t k = 0; k < traj.size(); ++k)
          j.push_back({{"t", static_cast<double>(k) * dt},
                       {"q", std::vector<double>(traj[k].q.data(), traj[k].q.data() + traj[k].q.size())},
                       {"v", std::vector<double>(traj[k].v.data(), traj[k].v.data() + traj[k].v.size())}});
        o << j.dump() << '\n';
      }
      else
      {
        o << 't';
        for (int i = 0; i < model.nq; ++i)
          o << ",q" << i;
        for (int i = 0; i < model.nv; ++i)
          o << ",v" << i;
        o << '\n';
        for (std::size_t k = 0; k < traj.size(); ++k)
        {
          o << static_cast<double>(k) * dt;
          for (int i = 0; i < model.nq; ++i)
            o << ',' << traj[k].q[i];
          for (int i = 0; i < model.nv; ++i)
            o << ',' << traj[k].v[i];
          o << '\n';
        }
      }
      write_text(out, o.str());
    }
    return kOk;
  }

  int cmd_info(const std::string & model_spec, std::uint64_t seed)
  {
    const pvdyn::Model model = pvdyn::model_from_spec(model_spec, seed);
    double mass = 0.0;
    for (const auto & I : model.inertias)
      mass += I.mass;
    const char * base = model.base_type() == pvdyn::BaseType::Floating ? "floating" : "fixed";
    std::printf("links   %d\nnq      %d\nnv      %d\ndepth   %d\nleaves  %zu\nbase    %s\nmass    %.6g kg\n",
                model.n_links(), model.nq, model.nv, pvdyn::tree_depth(model), pvdyn::leaf_links(model).size(), base,
                mass);
    for (int i = 0; i < model.n_links(); ++i)
    {
      const auto u = static_cast<std::size_t>(i);
      std::printf("  %3d %-20s parent %3d  %s\n", i, model.names[u].c_str(), model.parents[u],
                  pvdyn::to_string(model.joints[u].type));
    }
    return kOk;
  }

} // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"pvdyn: constrained rigid-body dynamics checks, benchmarks and rollouts"};
  app.require_subcommand(1);

  std::string model = "humanoid";
  std::string solver;
  std::string out;
  std::string scheme = "euler";
  int m = 6;
  int steps = 1000;
  int reps = 30;
  int instances = 0;
  double dt = 1e-3;
  std::uint64_t seed = 1;

  auto * check = app.add_subcommand("check", "run the oracle-equivalence check suite");
  check->add_option("--seed", seed, "random seed");
  check->add_option("--instances", instances, "feasible instances (default 200; other groups scale with it)")
    ->check(CLI::PositiveNumber);
  check->add_option("--out", out, "write the JSON report here");

  auto * bench = app.add_subcommand("bench", "time algorithms and count their flops");
  bench->add_option("--model", model, "chain:N[,N...] | tree:N[,N...]:B | humanoid | quadruped | URDF path");
  bench->add_option("--solver", solver, "comma-separated algorithms")->default_val("caba");
  bench->add_option("--m", m, "constraint rows")->check(CLI::NonNegativeNumber);
  bench->add_option("--reps", reps, "measured repetitions (>= 30)")->check(CLI::Range(30, 1000000));
  bench->add_option("--seed", seed, "random seed");
  bench->add_option("--out", out, "write records as CSV, or JSON for a .json path");

  auto * roll = app.add_subcommand("rollout", "integrate a model with anchored constraints");
  roll->add_option("--model", model, "chain:N | tree:N:B | humanoid | quadruped | URDF path");
  roll->add_option("--solver", solver, "aba | pv | pv_soft | pv_early | caba")->default_val("pv");
  roll->add_option("--m", m, "constraint rows")->check(CLI::NonNegativeNumber);
  roll->add_option("--dt", dt, "time step [s]")->check(CLI::PositiveNumber);
  roll->add_option("--steps", steps, "number of steps")->check(CLI::NonNegativeNumber);
  roll->add_option("--seed", seed, "random seed");
  roll->add_option("--scheme", scheme, "euler | rk4");
  roll->add_option("--out", out, "write the trajectory as CSV, or JSON for a .json path");

  auto * info = app.add_subcommand("info", "print model statistics");
  info->add_option("--model", model, "chain:N | tree:N:B | humanoid | quadruped | URDF path")->required();
  info->add_option("--seed", seed, "random seed for tree models");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError & e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try
  {
    if (*check)
      return cmd_check(seed, instances, out);
    if (*bench)
      return cmd_bench(model, solver, m, reps, seed, out);
    if (*roll)
      return cmd_rollout(model, solver, m, dt, steps, seed, scheme, out);
    if (*info)
      return cmd_info(model, seed);
  }
  catch (const CLI::Error & e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  catch (const pvdyn::UnknownAlgorithm & e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  catch (const pvdyn::ModelLoadError & e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  catch (const std::exception & e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}
