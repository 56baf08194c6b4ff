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
#include <cstdint>
#include <vector>

#include "pvdyn/baseline/articulated.hpp"
#include "pvdyn/constrained/types.hpp"

namespace pvdyn
{

  namespace detail
  {
    using RowBlock = Eigen::Matrix<double, Eigen::Dynamic, 6>;

    /// Constraint rows still coupled to the multipliers at one link of the
    /// backward sweep:  y = Omega a + L lambda + l,  where a is the link's
    /// (or, after crossing its joint, the parent's) acceleration and y the
    /// constrained accelerations of the listed rows.
    struct RowSet
    {
      std::vector<int> rows; // global row indices
      RowBlock Omega;
      MatrixX L;
      VectorX l;

      int size() const { return static_cast<int>(rows.size()); }

      void reserve(int cap)
      {
        rows.reserve(static_cast<std::size_t>(cap));
        Omega.resize(cap, 6);
        L.resize(cap, cap);
        l.resize(cap);
      }
    };

    /// Multipliers of one constraint eliminated below the root:
    /// lambda_C = Linv (rhs - Omega a_parent - L_CR lambda_R).
    struct EarlyRecord
    {
      std::vector<int> rows_C;
      std::vector<int> rows_R;
      MatrixX Linv;
      RowBlock Omega;
      MatrixX L_CR;
      VectorX rhs;
    };

    /// Node of the tree restricted to constrained links, their pairwise
    /// lowest common ancestors and the root.
    struct VirtualNode
    {
      int link = 0;
      int parent = -1;             // index into the virtual node list
      std::vector<int> segment;    // links from `link` up to, not including, the parent's link
      std::vector<int> constraints; // constraints attached to this link
    };
  } // namespace detail

  /// Instrumentation filled by the constrained solvers and Delassus routines.
  struct PvStats
  {
    int max_dual_dim = 0;          ///< largest multiplier system factorized
    int root_dual_dim = 0;         ///< rows left for the base-level solve
    int early_eliminations = 0;    ///< constraints eliminated below the base
    std::uint64_t propagations = 0; ///< constraint rows (or propagator rows) moved across a joint
  };

  /// Buffers for the constrained sweeps, shaped by a (model, constraint set)
  /// pair. Row values and targets may change between calls; the link and row
  /// layout may not.
  class PvWorkspace
  {
  public:
    PvWorkspace(const Model & model, const ConstraintSet & cs)
    {
      cs.validate(model);
      const auto n = static_cast<std::size_t>(model.n_links());
      n_links_ = model.n_links();
      nv_ = model.nv;
      m_ = cs.m();
      for (int k = 0; k < cs.size(); ++k)
        layout_.push_back({cs[k].link, cs[k].dim()});

      sweep.resize(model);
      constraints_at.assign(n, {});
      for (int k = 0; k < cs.size(); ++k)
        constraints_at[static_cast<std::size_t>(cs[k].link)].push_back(k);
      row_constraint.resize(static_cast<std::size_t>(m_));
      for (int k = 0; k < cs.size(); ++k)
        for (int r = 0; r < cs[k].dim(); ++r)
          row_constraint[static_cast<std::size_t>(cs.offset(k) + r)] = k;

      capacity.assign(n, 0);
      for (std::size_t i = n; i-- > 0;)
      {
        for (int k : constraints_at[i])
          capacity[i] += cs[k].dim();
        if (model.parents[i] >= 0)
          capacity[static_cast<std::size_t>(model.parents[i])] += capacity[i];
      }
      sets.resize(n);
      OS.resize(n);
      cross_rows.resize(n);
      records.resize(n);
      n_records.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i)
      {
        sets[i].reserve(capacity[i]);
        OS[i].resize(capacity[i], model.joints[i].nv());
        cross_rows[i].reserve(static_cast<std::size_t>(capacity[i]));
      }
      b.resize(m_);
      lambda.resize(m_);
      link_of_row.resize(static_cast<std::size_t>(m_));
      for (int r = 0; r < m_; ++r)
        link_of_row[static_cast<std::size_t>(r)] = cs[row_constraint[static_cast<std::size_t>(r)]].link;

      scratch.resize(m_, 6);
      gathered.resize(m_);
      root_matrix.resize(m_, m_);
      root_llt = Eigen::LLT<MatrixX>(m_);
      build_virtual_tree(model, cs);
    }

    /// Throws DimensionMismatch unless (model, cs) has the layout this
    /// workspace was built for.
    void check(const Model & model, const ConstraintSet & cs) const
    {
      bool ok = model.n_links() == n_links_ && model.nv == nv_ && cs.m() == m_
                && static_cast<std::size_t>(cs.size()) == layout_.size();
      for (int k = 0; ok && k < cs.size(); ++k)
        ok = cs[k].link == layout_[static_cast<std::size_t>(k)].first
             && cs[k].dim() == layout_[static_cast<std::size_t>(k)].second;
      if (!ok)
        throw DimensionMismatch("workspace was built for a different model or constraint layout");
    }

    int m() const { return m_; }

    detail::ArticulatedSweep sweep;
    std::vector<std::vector<int>> constraints_at; // constraint indices per link
    std::vector<int> row_constraint;              // constraint index of each row
    std::vector<int> link_of_row;
    std::vector<int> capacity;                    // rows in each subtree

    std::vector<detail::RowSet> sets;
    std::vector<MatrixX> OS;                      // Omega S at each joint crossing
    std::vector<std::vector<int>> cross_rows;     // rows of OS
    std::vector<std::vector<detail::EarlyRecord>> records;
    std::vector<int> n_records;

    MatrixX scratch;        // m x 6 row workspace
    VectorX gathered;       // multipliers gathered by row list
    MatrixX root_matrix;
    Eigen::LLT<MatrixX> root_llt;

    VectorX b;      // stacked targets on the sweep accelerations
    VectorX lambda;

    std::vector<detail::VirtualNode> vnodes;      // sorted by link index
    std::vector<int> vnode_of_link;               // -1 if the link is not a virtual node
    std::vector<Matrix6> Pi, Xi;
    std::vector<std::vector<detail::RowBlock>> Fpath; // per constraint: rows at each virtual ancestor
    std::vector<std::vector<int>> vpath;              // per constraint: virtual nodes from its link to the root

    PvStats stats;

  private:
    void build_virtual_tree(const Model & model, const ConstraintSet & cs)
    {
      const auto n = static_cast<std::size_t>(model.n_links());
      std::vector<bool> in(n, false);
      in[0] = true;
      std::vector<int> links;
      for (int k = 0; k < cs.size(); ++k)
        if (!in[static_cast<std::size_t>(cs[k].link)])
        {
          in[static_cast<std::size_t>(cs[k].link)] = true;
          links.push_back(cs[k].link);
        }
      auto lca = [&](int a, int c) {
        while (a != c)
        {
          if (a > c)
            a = model.parents[static_cast<std::size_t>(a)];
          else
            c = model.parents[static_cast<std::size_t>(c)];
        }
        return a;
      };
      for (std::size_t x = 0; x < links.size(); ++x)
        for (std::size_t y = x + 1; y < links.size(); ++y)
          in[static_cast<std::size_t>(lca(links[x], links[y]))] = true;

      vnode_of_link.assign(n, -1);
      for (std::size_t i = 0; i < n; ++i)
        if (in[i])
        {
          vnode_of_link[i] = static_cast<int>(vnodes.size());
          detail::VirtualNode v;
          v.link = static_cast<int>(i);
          v.constraints = constraints_at[i];
          vnodes.push_back(std::move(v));
        }
      for (auto & v : vnodes)
      {
        if (v.link == 0)
          continue;
        int j = v.link;
        do
        {
          v.segment.push_back(j);
          j = model.parents[static_cast<std::size_t>(j)];
        } while (vnode_of_link[static_cast<std::size_t>(j)] < 0);
        v.parent = vnode_of_link[static_cast<std::size_t>(j)];
      }
      Pi.assign(vnodes.size(), Matrix6::Identity());
      Xi.assign(vnodes.size(), Matrix6::Zero());
      Fpath.resize(static_cast<std::size_t>(cs.size()));
      vpath.resize(static_cast<std::size_t>(cs.size()));
      for (int k = 0; k < cs.size(); ++k)
      {
        auto & path = vpath[static_cast<std::size_t>(k)];
        for (int v = vnode_of_link[static_cast<std::size_t>(cs[k].link)]; v >= 0;
             v = vnodes[static_cast<std::size_t>(v)].parent)
          path.push_back(v);
        Fpath[static_cast<std::size_t>(k)].assign(path.size(), detail::RowBlock(cs[k].dim(), 6));
      }
    }

    int n_links_ = 0;
    int nv_ = 0;
    int m_ = 0;
    std::vector<std::pair<int, int>> layout_;
  };

} // namespace pvdyn
