#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The stochmech Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "stochmech/scenario.hpp"

#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochmech {

inline constexpr std::size_t kMaxConsortiumMembers = 4;

namespace detail {

/// Redirects references to consortium members to attributes of the
/// consortium's result: r[m].x -> r[K].m.x, present(m) -> present(K) and
/// r[K].m.present = 'yes'. With `owner` set, own.x -> own.owner.x.
inline ExprPtr redirect(ExprPtr const &e, std::set<PlayerId> const &members, PlayerId const &k,
                        std::string const &owner)
{
  ExprNode n = *e;
  switch (n.kind)
  {
  case ExprKind::ResultRef:
    if (members.count(n.text))
    {
      n.attr = n.text + "." + n.attr;
      n.text = k;
    }
    return make(std::move(n));
  case ExprKind::OwnRef:
    if (!owner.empty())
    {
      n.attr = owner + "." + n.attr;
    }
    return make(std::move(n));
  case ExprKind::Present:
    if (members.count(n.text))
    {
      ExprNode here;
      here.kind = ExprKind::Present;
      here.text = k;
      ExprNode flag;
      flag.kind = ExprKind::ResultRef;
      flag.text = k;
      flag.attr = n.text + ".present";
      ExprNode yes;
      yes.kind = ExprKind::String;
      yes.text = "yes";
      return binary(BinOp::And, make(std::move(here)), binary(BinOp::Eq, make(std::move(flag)), make(std::move(yes))));
    }
    return e;
  default:
    for (auto &a : n.args)
    {
      a = redirect(a, members, k, owner);
    }
    return make(std::move(n));
  }
}

}  // namespace detail

inline UtilityExpr redirect_utility(UtilityExpr const &u, std::set<PlayerId> const &members, PlayerId const &k)
{
  return UtilityExpr(detail::redirect(u.root_ptr(), members, k, ""));
}

/// One player simulating the members: a root decision over member subsets
/// (bitmask order, the empty set first) followed by the time-ordered product
/// of the chosen members' trees. Utility is the sum of member utilities over
/// the chosen subset.
inline PlayerType consortium(std::vector<PlayerType> const &members, PlayerId const &id,
                             std::optional<Rat> root_time = std::nullopt)
{
  if (members.empty() || members.size() > kMaxConsortiumMembers)
  {
    throw std::invalid_argument("a consortium needs 1 to " + std::to_string(kMaxConsortiumMembers) + " members");
  }
  std::set<PlayerId> ids;
  Rat                earliest;
  bool               any_time = false;
  for (auto const &m : members)
  {
    if (!ids.insert(m.player).second)
    {
      throw std::invalid_argument("duplicate consortium member '" + m.player + "'");
    }
    for_each_node(*m.tree, [&](TreeNode const &n, TreeNode const *) {
      if (n.timed && (!any_time || n.time < earliest))
      {
        earliest = n.time;
        any_time = true;
      }
    });
  }
  Rat const t0 = root_time.value_or(any_time ? earliest / Rat(2) : Rat(1));
  if (any_time && t0 >= earliest)
  {
    throw std::invalid_argument("consortium root time must precede every member event");
  }

  std::size_t const m = members.size();
  std::vector<NodePtr> branches;
  for (unsigned mask = 0; mask < (1u << m); ++mask)
  {
    std::string const prefix = std::to_string(mask) + ":";
    std::function<NodePtr(std::vector<TreeNode const *> const &)> product =
        [&](std::vector<TreeNode const *> const &f) -> NodePtr {
      std::string name = prefix;
      std::optional<std::size_t> next;
      for (std::size_t k = 0; k < m; ++k)
      {
        if (f[k] == nullptr)
        {
          continue;
        }
        name += (name.size() > prefix.size() ? "|" : "") + f[k]->id;
        if (f[k]->is_internal())
        {
          if (next && f[k]->time == f[*next]->time)
          {
            throw std::invalid_argument("consortium members share event time " + f[k]->time.str());
          }
          if (!next || f[k]->time < f[*next]->time)
          {
            next = k;
          }
        }
      }
      if (mask == 0)
      {
        name += "none";
      }
      if (!next)
      {
        ResultLabel r;
        Rat         cost;
        for (std::size_t k = 0; k < m; ++k)
        {
          PlayerId const &p = members[k].player;
          r.atoms.emplace(p + ".present", std::string(f[k] != nullptr ? "yes" : "no"));
          if (f[k] == nullptr)
          {
            continue;
          }
          for (auto const &[attr, v] : f[k]->result.atoms)
          {
            r.atoms.emplace(p + "." + attr, v);
          }
          r.atoms.emplace(p + ".cost", f[k]->cost);
          cost = cost + f[k]->cost;
        }
        return make_leaf(name, r, cost);
      }
      TreeNode const *n = f[*next];
      TreeNode        out;
      out.id            = name;
      out.kind          = n->kind;
      out.time          = n->time;
      out.probabilities = n->probabilities;
      for (auto const &c : n->children)
      {
        auto g     = f;
        g[*next]   = c.get();
        out.children.push_back(product(g));
      }
      return std::make_shared<TreeNode const>(std::move(out));
    };
    std::vector<TreeNode const *> f(m, nullptr);
    for (std::size_t k = 0; k < m; ++k)
    {
      if (mask & (1u << k))
      {
        f[k] = members[k].tree.get();
      }
    }
    branches.push_back(product(f));
  }

  detail::ExprPtr sum;
  for (auto const &mem : members)
  {
    detail::ExprNode flag;
    flag.kind = detail::ExprKind::OwnRef;
    flag.attr = mem.player + ".present";
    detail::ExprNode yes;
    yes.kind = detail::ExprKind::String;
    yes.text = "yes";
    detail::ExprNode cond;
    cond.kind = detail::ExprKind::If;
    cond.args = {detail::binary(detail::BinOp::Eq, detail::make(std::move(flag)), detail::make(std::move(yes))),
                 detail::redirect(mem.utility.root_ptr(), ids, id, mem.player), detail::number(Rat(0))};
    auto term = detail::make(std::move(cond));
    sum       = sum ? detail::binary(detail::BinOp::Add, sum, term) : term;
  }
  return {id, make_decision(id + ".subset", t0, std::move(branches)), UtilityExpr(sum)};
}

/// The scenario with `members` replaced by one consortium agent `id`,
/// placed where the first member was; everyone else's utility is redirected.
inline Scenario with_consortium(Scenario const &s, std::vector<PlayerId> const &members, PlayerId const &id)
{
  std::set<PlayerId>      set(members.begin(), members.end());
  std::vector<PlayerType> types;
  for (auto const &p : members)
  {
    PlayerType const *t = s.agent(p);
    if (t == nullptr)
    {
      throw std::invalid_argument("unknown consortium member '" + p + "'");
    }
    types.push_back(*t);
  }
  if (s.agent(id) != nullptr && set.count(id) == 0)
  {
    throw std::invalid_argument("consortium id '" + id + "' is already used");
  }
  Scenario out    = s;
  out.name        = s.name + "+" + id;
  out.principal.utility = redirect_utility(s.principal.utility, set, id);
  out.agents.clear();
  bool placed = false;
  for (auto const &a : s.agents)
  {
    if (set.count(a.player))
    {
      if (!placed)
      {
        out.agents.push_back(consortium(types, id));
        placed = true;
      }
      continue;
    }
    PlayerType b = a;
    b.utility    = redirect_utility(a.utility, set, id);
    out.agents.push_back(b);
  }
  return out;
}

}  // namespace stochmech
