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

#include "stochmech/expr.hpp"
#include "stochmech/tree.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace stochmech {

using PlayerId = std::string;

/// Identifier the principal is known by in utility expressions and traces
/// unless a scenario names the principal differently.
inline constexpr char const *kDefaultPrincipalId = "C";

/// A player's private type: decision tree plus utility function.
struct PlayerType
{
  PlayerId    player;
  NodePtr     tree;
  UtilityExpr utility;
};

struct Provenance
{
  enum class Kind
  {
    Truthful,
    Shifted,
    Arbitrary
  };
  Kind kind  = Kind::Truthful;
  Rat  shift;  // cumulative shift for Kind::Shifted

  std::string str() const
  {
    switch (kind)
    {
    case Kind::Truthful:
      return "truthful";
    case Kind::Shifted:
      return "shifted(" + shift.str() + ")";
    default:
      return "arbitrary";
    }
  }
};

/// What an agent submits: a (tree, utility) pair with the same shape as a
/// type, not necessarily equal to the true one.
struct Application
{
  PlayerId    player;
  NodePtr     tree;
  UtilityExpr utility;
  Provenance  provenance;

  static Application truthful(PlayerType const &t) { return {t.player, t.tree, t.utility, {}}; }
  static Application arbitrary(PlayerId player, NodePtr tree, UtilityExpr utility)
  {
    return {std::move(player), std::move(tree), std::move(utility), {Provenance::Kind::Arbitrary, {}}};
  }

  PlayerType as_type() const { return {player, tree, utility}; }
};

/// (tree, utility + x). Positive x asks x less at every leaf.
inline Application shift_application(Application const &a, Rat const &x)
{
  Application out = a;
  out.utility     = a.utility.plus(x);
  if (a.provenance.kind == Provenance::Kind::Arbitrary)
  {
    return out;
  }
  Rat const total = (a.provenance.kind == Provenance::Kind::Shifted ? a.provenance.shift : Rat(0)) + x;
  out.provenance  = total.is_zero() ? Provenance{} : Provenance{Provenance::Kind::Shifted, total};
  return out;
}

struct Scenario
{
  std::string             name;
  std::string             description;
  PlayerType              principal;
  std::vector<PlayerType> agents;

  PlayerType const *agent(PlayerId const &id) const
  {
    for (auto const &a : agents)
    {
      if (a.player == id)
      {
        return &a;
      }
    }
    return nullptr;
  }

  std::vector<PlayerId> agent_ids() const
  {
    std::vector<PlayerId> ids;
    for (auto const &a : agents)
    {
      ids.push_back(a.player);
    }
    return ids;
  }
};

struct ScenarioError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Evaluates a utility at an endstate. `results` maps every participating
/// player (the owner included) to its achieved result.
inline ExtReal eval_utility(UtilityExpr const &expr, TreeNode const &own_leaf,
                            std::map<std::string, ResultLabel const *> const &results)
{
  if (!own_leaf.is_leaf())
  {
    throw std::invalid_argument("eval_utility needs a leaf, got " + std::string(kind_name(own_leaf.kind)) +
                                " node '" + own_leaf.id + "'");
  }
  EvalContext ctx;
  ctx.own_cost   = own_leaf.cost;
  ctx.own_result = &own_leaf.result;
  ctx.results    = &results;
  return expr.evaluate(ctx);
}

/// Structural problems of one tree, each prefixed with `who`.
inline void validate_tree(TreeNode const &root, std::string const &who, std::vector<std::string> &out)
{
  std::set<std::string> ids;
  for_each_node(root, [&](TreeNode const &n, TreeNode const *parent) {
    std::string const where = who + " node '" + n.id + "'";
    if (!ids.insert(n.id).second)
    {
      out.push_back(who + ": duplicate node id '" + n.id + "'");
    }
    if (n.timed && n.time <= Rat(0))
    {
      out.push_back(where + ": time " + n.time.str() + " is not strictly positive");
    }
    if (parent != nullptr && n.timed && n.time <= parent->time)
    {
      out.push_back(where + ": time " + n.time.str() + " is not later than its parent's time " +
                    parent->time.str());
    }
    if (n.is_internal() && n.children.empty())
    {
      out.push_back(where + ": " + kind_name(n.kind) + " node without children");
    }
    if (n.is_leaf() && !n.children.empty())
    {
      out.push_back(where + ": leaf with children");
    }
    if (n.kind == NodeKind::Chance)
    {
      if (n.probabilities.size() != n.children.size())
      {
        out.push_back(where + ": probability count does not match branch count");
        return;
      }
      Rat sum;
      for (Rat const &p : n.probabilities)
      {
        if (p <= Rat(0))
        {
          out.push_back(where + ": branch probability " + p.str() + " is not strictly positive");
        }
        sum += p;
      }
      if (sum != Rat(1))
      {
        out.push_back(where + ": probabilities sum to " + sum.str());
      }
    }
  });
}

/// Every violated invariant; empty iff the scenario is valid.
inline std::vector<std::string> validate_scenario(Scenario const &s)
{
  std::vector<std::string> out;
  std::set<PlayerId>       players{s.principal.player};
  for (auto const &a : s.agents)
  {
    if (!players.insert(a.player).second)
    {
      out.push_back("duplicate player id '" + a.player + "'");
    }
  }

  std::vector<PlayerType const *> all{&s.principal};
  for (auto const &a : s.agents)
  {
    all.push_back(&a);
  }

  std::map<Rat, std::vector<std::string>> event_times;
  for (auto const *p : all)
  {
    if (!p->tree)
    {
      out.push_back("player '" + p->player + "' has no tree");
      continue;
    }
    validate_tree(*p->tree, "player '" + p->player + "'", out);
    for_each_node(*p->tree, [&](TreeNode const &n, TreeNode const *) {
      if (n.is_internal())
      {
        event_times[n.time].push_back(p->player + ":" + n.id);
      }
    });
    for (auto const &ref : p->utility.referenced_players())
    {
      if (players.count(ref) == 0)
      {
        out.push_back("utility of '" + p->player + "' references unknown player '" + ref + "'");
      }
    }
  }
  for (auto const &[t, nodes] : event_times)
  {
    if (nodes.size() > 1)
    {
      std::string list;
      for (auto const &n : nodes)
      {
        list += (list.empty() ? "" : ", ") + n;
      }
      out.push_back("duplicate event time " + t.str() + " (" + list + ")");
    }
  }
  return out;
}

struct TimePerturbation
{
  PlayerId    player;
  std::string node;
  Rat         before;
  Rat         after;
};

/// Breaks event-time ties deterministically by (time, player id, node id)
/// by nudging later members of each tie group forward by a fraction of the
/// smallest gap. Returns the adjusted scenario and every nudge applied.
inline std::pair<Scenario, std::vector<TimePerturbation>> normalize_times(Scenario const &s)
{
  struct Entry
  {
    Rat         time;
    PlayerId    player;
    std::string node;
  };
  std::vector<Entry> entries;
  std::set<Rat>      distinct;
  Rat                min_gap(-1);

  auto visit = [&](PlayerType const &p) {
    for_each_node(*p.tree, [&](TreeNode const &n, TreeNode const *parent) {
      if (n.timed)
      {
        distinct.insert(n.time);
        if (parent != nullptr)
        {
          Rat const gap = n.time - parent->time;
          if (gap > Rat(0) && (min_gap < Rat(0) || gap < min_gap))
          {
            min_gap = gap;
          }
        }
      }
      if (n.is_internal())
      {
        entries.push_back({n.time, p.player, n.id});
      }
    });
  };
  visit(s.principal);
  for (auto const &a : s.agents)
  {
    visit(a);
  }
  Rat prev(-1);
  for (Rat const &t : distinct)
  {
    if (prev >= Rat(0) && (min_gap < Rat(0) || t - prev < min_gap))
    {
      min_gap = t - prev;
    }
    prev = t;
  }
  if (min_gap < Rat(0))
  {
    min_gap = Rat(1);
  }

  std::sort(entries.begin(), entries.end(), [](Entry const &a, Entry const &b) {
    return std::tie(a.time, a.player, a.node) < std::tie(b.time, b.player, b.node);
  });
  std::size_t largest = 1;
  for (std::size_t i = 0; i < entries.size();)
  {
    std::size_t j = i;
    while (j < entries.size() && entries[j].time == entries[i].time)
    {
      ++j;
    }
    largest = std::max(largest, j - i);
    i       = j;
  }
  Rat const step = min_gap / Rat(static_cast<std::int64_t>(2 * (largest + 1)));

  std::map<std::pair<PlayerId, std::string>, Rat> moved;
  std::vector<TimePerturbation>                   report;
  for (std::size_t i = 0; i < entries.size();)
  {
    std::size_t j = i;
    while (j < entries.size() && entries[j].time == entries[i].time)
    {
      ++j;
    }
    for (std::size_t k = i + 1; k < j; ++k)
    {
      Rat const after = entries[k].time + step * Rat(static_cast<std::int64_t>(k - i));
      moved[{entries[k].player, entries[k].node}] = after;
      report.push_back({entries[k].player, entries[k].node, entries[k].time, after});
    }
    i = j;
  }

  auto retime = [&](PlayerType const &p) {
    PlayerType out = p;
    out.tree       = transform_tree(p.tree, [&](TreeNode n) {
      auto it = moved.find({p.player, n.id});
      if (it != moved.end())
      {
        n.time = it->second;
      }
      return n;
    });
    return out;
  };
  Scenario out  = s;
  out.principal = retime(s.principal);
  for (auto &a : out.agents)
  {
    a = retime(a);
  }
  return {out, report};
}

}  // namespace stochmech
