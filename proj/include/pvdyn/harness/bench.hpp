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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pvdyn/baseline/kkt_oracle.hpp"
#include "pvdyn/baseline/ltl.hpp"
#include "pvdyn/delassus/osim.hpp"
#include "pvdyn/generators.hpp"
#include "pvdyn/harness/instances.hpp"
#include "pvdyn/urdf.hpp"

namespace pvdyn
{

  struct BenchRecord
  {
    std::string algorithm;
    int n = 0; ///< dofs
    int m = 0; ///< constraint rows
    int d = 0; ///< tree depth
    int reps = 0;
    double mean_ns = 0.0;
    double std_ns = 0.0;
    double min_ns = 0.0;
    std::uint64_t flops = 0; ///< instrumented count for one call
    std::uint64_t seed = 0;

    bool operator==(const BenchRecord &) const = default;
  };

  struct BenchSpec
  {
    std::vector<std::string> algorithms;
    std::string family = "chain"; ///< chain | tree | humanoid | quadruped | URDF path
    std::vector<int> sizes{64};   ///< joint counts for chain and tree; ignored otherwise
    int branching = 2;
    int m = 6;
    int reps = 30;
    int warmup = 10;
    std::uint64_t seed = 1;
    int threads = 0; ///< 0: PVDYN_THREADS, or 1 when unset
  };

  /// Names accepted by run_bench.
  inline const std::vector<std::string> & bench_algorithms()
  {
    static const std::vector<std::string> names{"aba",     "pv",      "pv_early", "pv_soft",   "caba",     "kkt",
                                                "crba",    "pv_osim", "pv_osimr", "caba_osim", "ltl_osim"};
    return names;
  }

  inline int tree_depth(const Model & model)
  {
    std::vector<int> depth(static_cast<std::size_t>(model.n_links()), 0);
    int d = 0;
    for (std::size_t i = 1; i < depth.size(); ++i)
    {
      depth[i] = depth[static_cast<std::size_t>(model.parents[i])] + 1;
      d = std::max(d, depth[i]);
    }
    return d;
  }

  /// Model for a family name and size: "chain", "tree", "humanoid",
  /// "quadruped", or a URDF path.
  inline Model bench_model(const std::string & family, int size, int branching, std::uint64_t seed)
  {
    if (family == "chain")
      return generate_chain(size);
    if (family == "tree")
      return generate_tree(size, branching, seed);
    if (family == "humanoid")
      return generate_humanoid_like();
    if (family == "quadruped")
      return generate_quadruped_like();
    try
    {
      return load_urdf(family);
    }
    catch (const Error & e)
    {
      throw ModelLoadError("cannot load model '" + family + "': " + e.what());
    }
  }

  /// Model from a command-line style spec: "chain:N", "tree:N:B",
  /// "humanoid", "quadruped", or a URDF path.
  inline Model model_from_spec(const std::string & spec, std::uint64_t seed)
  {
    auto field = [&](const std::string & text) {
      std::size_t used = 0;
      int v = 0;
      try
      {
        v = std::stoi(text, &used);
      }
      catch (const std::exception &)
      {
        used = 0;
      }
      if (used != text.size() || v < 1)
        throw ModelLoadError("bad model spec '" + spec + "'");
      return v;
    };
    if (spec.rfind("chain:", 0) == 0)
      return generate_chain(field(spec.substr(6)));
    if (spec.rfind("tree:", 0) == 0)
    {
      const std::string rest = spec.substr(5);
      const auto colon = rest.find(':');
      if (colon == std::string::npos)
        throw ModelLoadError("bad model spec '" + spec + "' (expected tree:N:B)");
      return generate_tree(field(rest.substr(0, colon)), field(rest.substr(colon + 1)), seed);
    }
    return bench_model(spec, 0, 1, seed);
  }

  namespace detail
  {
    struct BenchCell
    {
      std::string algorithm;
      int size = 0;
    };

    inline int bench_threads(int requested)
    {
      if (requested > 0)
        return requested;
      if (const char * env = std::getenv("PVDYN_THREADS"))
      {
        const int t = std::atoi(env);
        if (t > 0)
          return t;
      }
      return 1;
    }

    /// Builds the timed call for one algorithm. Workspaces are allocated
    /// here, outside the timed region.
    inline std::function<double()> bench_call(const std::string & alg, const Instance & in,
                                              std::shared_ptr<PvWorkspace> ws)
    {
      const Model & model = in.model;
      const State & state = in.state;
      const VectorX & tau = in.tau;
      const ConstraintSet & cs = in.cs;
      SolverSettings soft;
      soft.soft_R = VectorX::Constant(cs.m(), 1e-6);
      const SolverSettings prox;
      if (alg == "aba")
      {
        auto sw = std::make_shared<ArticulatedSweep>(model);
        return [&, sw] { return aba(model, state, tau, *sw).sum(); };
      }
      if (alg == "pv")
        return [&, ws] { return pv_solve(model, state, tau, cs, *ws).qdd.sum(); };
      if (alg == "pv_early")
        return [&, ws] { return pv_early_solve(model, state, tau, cs, *ws).qdd.sum(); };
      if (alg == "pv_soft")
        return [&, ws, soft] { return pv_soft_solve(model, state, tau, cs, soft, *ws).qdd.sum(); };
      if (alg == "caba")
        return [&, ws, prox] { return constrained_aba(model, state, tau, cs, prox, *ws).qdd.sum(); };
      if (alg == "kkt")
        return [&] { return kkt_oracle(model, state, tau, cs).qdd.sum(); };
      if (alg == "crba")
        return [&] { return crba(model, state).matrix.sum(); };
      if (alg == "pv_osim")
        return [&, ws] { return pv_osim(model, state, cs, *ws).matrix().sum(); };
      if (alg == "pv_osimr")
        return [&, ws] { return pv_osimr(model, state, cs, *ws).matrix().sum(); };
      if (alg == "caba_osim")
        return [&, ws, prox] { return caba_osim(model, state, cs, prox, *ws).matrix().sum(); };
      if (alg == "ltl_osim")
        // Same input as the recursive Delassus routines: a state, nothing
        // precomputed. Placements are computed once and shared.
        return [&] {
          KinematicsCache kin;
          position_kinematics(model, state.q, kin);
          const MatrixX J = constraint_jacobian(model, kin, cs);
          return ltl_osim(crba(model, kin), J).matrix().sum();
        };
      throw UnknownAlgorithm("unknown benchmark algorithm '" + alg + "'");
    }

    inline BenchRecord run_cell(const BenchSpec & spec, const BenchCell & cell)
    {
      Instance in;
      in.model = bench_model(spec.family, cell.size, spec.branching, spec.seed);
      in.state = random_state(in.model, spec.seed);
      std::mt19937_64 rng(spec.seed);
      in.tau = random_vector(rng, in.model.nv, 5.0);
      in.cs = benchmark_constraints(in.model, spec.m);
      auto ws = std::make_shared<PvWorkspace>(in.model, in.cs);
      const auto call = bench_call(cell.algorithm, in, ws);

      volatile double sink = 0.0;
      for (int r = 0; r < spec.warmup; ++r)
        sink = sink + call();
      const flops::Scope counted;
      sink = sink + call();
      const std::uint64_t flop_count = counted.elapsed();

      std::vector<double> ns(static_cast<std::size_t>(spec.reps));
      for (auto & t : ns)
      {
        const auto t0 = std::chrono::steady_clock::now();
        sink = sink + call();
        t = static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count());
      }
      (void)sink;

      BenchRecord rec;
      rec.algorithm = cell.algorithm;
      rec.n = in.model.nv;
      rec.m = in.cs.m();
      rec.d = tree_depth(in.model);
      rec.reps = spec.reps;
      double sum = 0.0;
      for (double t : ns)
        sum += t;
      rec.mean_ns = sum / static_cast<double>(ns.size());
      double var = 0.0;
      for (double t : ns)
        var += (t - rec.mean_ns) * (t - rec.mean_ns);
      rec.std_ns = ns.size() > 1 ? std::sqrt(var / static_cast<double>(ns.size() - 1)) : 0.0;
      rec.min_ns = *std::min_element(ns.begin(), ns.end());
      rec.flops = flop_count;
      rec.seed = spec.seed;
      return rec;
    }
  } // namespace detail

  /// Times every (algorithm, size) cell. Cells may run on parallel workers;
  /// the repetitions of one cell always run on one thread.
  inline std::vector<BenchRecord> run_bench(const BenchSpec & spec)
  {
    if (spec.reps < 30)
      throw InvalidConstraint("a benchmark needs at least 30 measured repetitions");
    for (const auto & a : spec.algorithms)
      if (std::find(bench_algorithms().begin(), bench_algorithms().end(), a) == bench_algorithms().end())
        throw UnknownAlgorithm("unknown benchmark algorithm '" + a + "'");
    const bool sized = spec.family == "chain" || spec.family == "tree";
    std::vector<detail::BenchCell> cells;
    for (int size : sized ? spec.sizes : std::vector<int>{0})
      for (const auto & a : spec.algorithms)
        cells.push_back({a, size});
    // Fail fast on a bad model before starting workers.
    (void)bench_model(spec.family, sized ? spec.sizes.front() : 0, spec.branching, spec.seed);

    std::vector<BenchRecord> out(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < cells.size(); k = next++)
      {
        try
        {
          out[k] = detail::run_cell(spec, cells[k]);
        }
        catch (...)
        {
          errors[k] = std::current_exception();
        }
      }
    };
    const int threads = std::min<int>(detail::bench_threads(spec.threads), static_cast<int>(cells.size()));
    if (threads <= 1)
      worker();
    else
    {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back(worker);
      for (auto & t : pool)
        t.join();
    }
    for (const auto & e : errors)
      if (e)
        std::rethrow_exception(e);
    return out;
  }

  inline constexpr const char * kBenchCsvHeader = "algorithm,n,m,d,reps,mean_ns,std_ns,min_ns,flops,seed";

  inline void emit_csv(const std::vector<BenchRecord> & records, const std::string & path)
  {
    std::ofstream f(path);
    if (!f)
      throw IoError("cannot write '" + path + "'");
    f << kBenchCsvHeader << '\n';
    f.precision(17);
    for (const auto & r : records)
      f << r.algorithm << ',' << r.n << ',' << r.m << ',' << r.d << ',' << r.reps << ',' << r.mean_ns << ','
        << r.std_ns << ',' << r.min_ns << ',' << r.flops << ',' << r.seed << '\n';
    if (!f)
      throw IoError("failed writing '" + path + "'");
  }

  inline nlohmann::json to_json(const BenchRecord & r)
  {
    return {{"algorithm", r.algorithm}, {"n", r.n},           {"m", r.m},           {"d", r.d},
            {"reps", r.reps},           {"mean_ns", r.mean_ns}, {"std_ns", r.std_ns}, {"min_ns", r.min_ns},
            {"flops", r.flops},         {"seed", r.seed}};
  }

  inline void emit_json(const std::vector<BenchRecord> & records, const std::string & path)
  {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto & r : records)
      arr.push_back(to_json(r));
    std::ofstream f(path);
    if (!f)
      throw IoError("cannot write '" + path + "'");
    f << arr.dump(2) << '\n';
    if (!f)
      throw IoError("failed writing '" + path + "'");
  }

  inline std::vector<BenchRecord> read_json(const std::string & path)
  {
    std::ifstream f(path);
    if (!f)
      throw IoError("cannot read '" + path + "'");
    std::vector<BenchRecord> out;
    try
    {
      for (const auto & j : nlohmann::json::parse(f))
      {
        BenchRecord r;
        r.algorithm = j.at("algorithm").get<std::string>();
        r.n = j.at("n").get<int>();
        r.m = j.at("m").get<int>();
        r.d = j.at("d").get<int>();
        r.reps = j.at("reps").get<int>();
        r.mean_ns = j.at("mean_ns").get<double>();
        r.std_ns = j.at("std_ns").get<double>();
        r.min_ns = j.at("min_ns").get<double>();
        r.flops = j.at("flops").get<std::uint64_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        out.push_back(std::move(r));
      }
    }
    catch (const nlohmann::json::exception & e)
    {
      throw IoError("malformed benchmark JSON '" + path + "': " + e.what());
    }
    return out;
  }

  /// Least-squares slope of log(y) against log(x).
  inline double loglog_slope(const std::vector<double> & x, const std::vector<double> & y)
  {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k)
    {
      const double lx = std::log(x[k]);
      const double ly = std::log(y[k]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }

} // namespace pvdyn
