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

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochmech {

/// Mid-run replacement of the subtree rooted at node `at`, in both the
/// application and the agent's real tree.
struct Modification
{
  std::string at;
  NodePtr     subtree;
};

/// Agent policy. Rules are keyed by node id; a node of the application is
/// matched with the node of the same id in the real tree.
struct Strategy
{
  std::string label = "cost_price";
  bool        participate = true;
  Application application;

  /// Chance node -> (true branch, or -1 for any) -> reported branch.
  std::map<std::string, std::map<int, std::size_t>> lies;
  /// Real decision node -> child executed regardless of requests.
  std::map<std::string, std::size_t> disobey;
  std::vector<Modification>          modifications;

  bool obedient() const { return lies.empty() && disobey.empty(); }

  /// Branch reported at presumed chance node `node`; `true_index` is the
  /// real outcome at the same node if it has happened.
  std::size_t report(std::string const &node, std::optional<std::size_t> true_index) const
  {
    auto it = lies.find(node);
    if (it != lies.end())
    {
      if (true_index)
      {
        auto jt = it->second.find(static_cast<int>(*true_index));
        if (jt != it->second.end())
        {
          return jt->second;
        }
      }
      auto jt = it->second.find(-1);
      if (jt != it->second.end())
      {
        return jt->second;
      }
    }
    return true_index.value_or(0);
  }

  /// Child executed at real decision node `node`; `requested` is the
  /// principal's request for that node if one arrived.
  std::size_t execute(std::string const &node, std::optional<std::size_t> requested) const
  {
    auto it = disobey.find(node);
    if (it != disobey.end())
    {
      return it->second;
    }
    return requested.value_or(0);
  }
};

inline Strategy cost_price(PlayerType const &t)
{
  Strategy s;
  s.label       = "cost_price";
  s.application = Application::truthful(t);
  return s;
}

/// Cost-price behaviour with every leaf asking `profit` more.
inline Strategy fair(PlayerType const &t, Rat const &profit)
{
  if (profit.is_zero())
  {
    return cost_price(t);
  }
  Strategy s    = cost_price(t);
  s.label       = "fair(" + profit.str() + ")";
  s.application = shift_application(s.application, -profit);
  return s;
}

/// Obedient behaviour with an arbitrary submitted utility.
inline Strategy fair_like(PlayerType const &t, UtilityExpr utility)
{
  Strategy s    = cost_price(t);
  s.label       = "fair_like";
  s.application = Application::arbitrary(t.player, t.tree, std::move(utility));
  return s;
}

inline Strategy opt_out(PlayerType const &t)
{
  Strategy s    = cost_price(t);
  s.label       = "opt-out";
  s.participate = false;
  return s;
}

inline std::map<PlayerId, Strategy> all_cost_price(Scenario const &s)
{
  std::map<PlayerId, Strategy> out;
  for (auto const &a : s.agents)
  {
    out.emplace(a.player, cost_price(a));
  }
  return out;
}

inline std::map<PlayerId, Strategy> all_fair(Scenario const &s, Rat const &profit)
{
  std::map<PlayerId, Strategy> out;
  for (auto const &a : s.agents)
  {
    out.emplace(a.player, fair(a, profit));
  }
  return out;
}

/// Adds a bet on another agent's result to the base application: the ask
/// rises by `stake` when r[other].attr equals `favoured` and falls by
/// stake*w/(1-w) otherwise, w being the presumed probability of the
/// favoured outcome. The presumed expectation of the tilt is zero.
inline Strategy betting_tilt(Strategy const &base, PlayerId const &other, std::string const &attr,
                             Atom const &favoured, Rat const &w, Rat const &stake)
{
  if (stake.is_zero())
  {
    return base;
  }
  if (w <= Rat(0) || w >= Rat(1))
  {
    throw std::invalid_argument("betting_tilt needs a presumed probability strictly between 0 and 1, got " +
                                w.str());
  }
  Rat const   other_side = stake * w / (Rat(1) - w);
  std::string fav        = std::holds_alternative<Rat>(favoured) ? std::get<Rat>(favoured).str()
                                                                 : "'" + std::get<std::string>(favoured) + "'";
  auto const tilt = UtilityExpr::parse("if present(" + other + ") then (if r[" + other + "]." + attr + " = " +
                                       fav + " then " + (-stake).str() + " else " + other_side.str() +
                                       ") else 0");
  Strategy s    = base;
  s.label       = base.label + "+tilt(" + other + "." + attr + "," + stake.str() + ")";
  s.application = Application::arbitrary(base.application.player, base.application.tree,
                                         base.application.utility + tilt);
  return s;
}

/// Strictly increasing worth function h for risk-averse agents.
class WorthFn
{
public:
  enum class Family
  {
    Affine,
    Exponential
  };

  /// h(x) = slope*x + intercept.
  static WorthFn affine(Rat slope, Rat intercept)
  {
    if (slope <= Rat(0))
    {
      throw std::invalid_argument("affine worth needs a positive slope");
    }
    WorthFn w;
    w.family_    = Family::Affine;
    w.slope_     = slope;
    w.intercept_ = intercept;
    return w;
  }

  /// h(x) = a - b*exp(-lambda*x).
  static WorthFn exponential(double a, double b, double lambda)
  {
    if (!(b > 0) || !(lambda > 0))
    {
      throw std::invalid_argument("exponential worth needs b > 0 and lambda > 0");
    }
    WorthFn w;
    w.family_ = Family::Exponential;
    w.a_      = a;
    w.b_      = b;
    w.lambda_ = lambda;
    return w;
  }

  Family family() const { return family_; }

  double operator()(double x) const
  {
    if (family_ == Family::Affine)
    {
      return slope_.to_double() * x + intercept_.to_double();
    }
    return a_ - b_ * std::exp(-lambda_ * x);
  }

  double inverse(double y) const
  {
    if (family_ == Family::Affine)
    {
      return (y - intercept_.to_double()) / slope_.to_double();
    }
    if (!(y < a_))
    {
      throw std::domain_error("worth " + std::to_string(y) + " is outside the range of h");
    }
    return -std::log((a_ - y) / b_) / lambda_;
  }

  /// Exact forms, available for affine worth only.
  Rat operator()(Rat const &x) const { return require_affine(), slope_ * x + intercept_; }
  Rat inverse(Rat const &y) const { return require_affine(), (y - intercept_) / slope_; }

private:
  void require_affine() const
  {
    if (family_ != Family::Affine)
    {
      throw std::logic_error("exact worth arithmetic needs an affine worth function");
    }
  }

  Family family_ = Family::Affine;
  Rat    slope_{1};
  Rat    intercept_{0};
  double a_ = 0, b_ = 1, lambda_ = 1;
};

/// h^-1(h(base) + sum of deltas): the payment asked by a reasonable
/// application at the end of the run.
inline Rat reasonable_ask(WorthFn const &h, Rat const &base, std::vector<Rat> const &deltas)
{
  Rat sum;
  for (auto const &d : deltas)
  {
    sum = sum + d;
  }
  return h.inverse(h(base) + sum);
}

inline double reasonable_ask_approx(WorthFn const &h, double base, std::vector<double> const &deltas)
{
  double sum = 0;
  for (double d : deltas)
  {
    sum += d;
  }
  return h.inverse(h(base) + sum);
}

/// Generators of the finite deviation family used by equilibrium checks.
struct DeviationFamily
{
  std::vector<Rat> shifts{Rat(1, 4), Rat(1, 2), Rat(1), Rat(2),  Rat(3),   Rat(5),  Rat(10),
                          Rat(20),   Rat(50),   Rat(100), Rat(-1, 4), Rat(-1, 2), Rat(-1), Rat(-2),
                          Rat(-3),   Rat(-5),   Rat(-10), Rat(-20), Rat(-50), Rat(-100)};
  /// Shifts that apply only while a given other agent is accepted.
  std::vector<Rat>         contingent_shifts{Rat(-1), Rat(1), Rat(5)};
  bool                     lies         = true;
  bool                     disobedience = true;
  bool                     opt_out      = true;
  bool                     false_trees  = true;
  bool                     combinations = true;
  std::vector<Application> pool;
};

namespace detail {

inline Rat earliest_time(Scenario const &s)
{
  std::optional<Rat> best;
  auto               visit = [&](PlayerType const &p) {
    for_each_node(*p.tree, [&](TreeNode const &n, TreeNode const *) {
      if (n.timed && (!best || n.time < *best))
      {
        best = n.time;
      }
    });
  };
  visit(s.principal);
  for (auto const &a : s.agents)
  {
    visit(a);
  }
  return best.value_or(Rat(1));
}

inline NodePtr with_leaf_cost(NodePtr const &root, std::string const &leaf, Rat const &delta)
{
  return transform_tree(root, [&](TreeNode n) {
    if (n.id == leaf)
    {
      n.cost = n.cost + delta;
    }
    return n;
  });
}

inline NodePtr with_shifted_mass(NodePtr const &root, std::string const &node, std::size_t from, std::size_t to)
{
  return transform_tree(root, [&](TreeNode n) {
    if (n.id == node)
    {
      Rat const moved = n.probabilities[from] / Rat(2);
      n.probabilities[from] = n.probabilities[from] - moved;
      n.probabilities[to]   = n.probabilities[to] + moved;
    }
    return n;
  });
}

inline std::string signed_str(Rat const &x) { return (x.sign() >= 0 ? "+" : "") + x.str(); }

}  // namespace detail

/// Deduplicated deviations of agent `j` from `base`, base first. Other
/// scenario agents are only consulted for contingent shifts and times.
inline std::vector<Strategy> enumerate_deviations(Scenario const &s, PlayerId const &j, Strategy const &base,
                                                  DeviationFamily const &family)
{
  PlayerType const *truth = s.agent(j);
  if (truth == nullptr)
  {
    throw std::invalid_argument("unknown agent '" + j + "'");
  }
  std::vector<Strategy> out;
  std::set<std::string> labels;
  auto add = [&](Strategy st) {
    if (labels.insert(st.label).second)
    {
      out.push_back(std::move(st));
    }
  };
  auto with_app = [&](std::string label, NodePtr tree, UtilityExpr utility) {
    Strategy st    = base;
    st.label       = std::move(label);
    st.application = Application::arbitrary(j, std::move(tree), std::move(utility));
    return st;
  };

  add(base);
  if (family.opt_out)
  {
    Strategy st    = base;
    st.label       = "opt-out";
    st.participate = false;
    add(st);
  }
  for (auto const &x : family.shifts)
  {
    Strategy st    = base;
    st.label       = "shift(" + detail::signed_str(x) + ")";
    st.application = shift_application(base.application, x);
    add(st);
  }
  for (auto const &o : s.agents)
  {
    if (o.player == j)
    {
      continue;
    }
    for (auto const &x : family.contingent_shifts)
    {
      auto const extra = UtilityExpr::parse("if present(" + o.player + ") then " + x.str() + " else 0");
      add(with_app("cshift(" + o.player + "," + detail::signed_str(x) + ")", base.application.tree,
                   base.application.utility + extra));
    }
  }

  std::vector<TreeNode const *> app_chances, app_leaves, real_decisions;
  for_each_node(*base.application.tree, [&](TreeNode const &n, TreeNode const *) {
    if (n.kind == NodeKind::Chance)
    {
      app_chances.push_back(&n);
    }
    else if (n.is_leaf())
    {
      app_leaves.push_back(&n);
    }
  });
  for_each_node(*truth->tree, [&](TreeNode const &n, TreeNode const *) {
    if (n.kind == NodeKind::Decision)
    {
      real_decisions.push_back(&n);
    }
  });

  std::vector<Strategy> lie_strategies;
  if (family.lies)
  {
    for (auto const *n : app_chances)
    {
      for (std::size_t r = 0; r < n->arity(); ++r)
      {
        Strategy st = base;
        st.label    = "lie(" + n->id + ":*->" + std::to_string(r) + ")";
        st.lies[n->id][-1] = r;
        lie_strategies.push_back(st);
        for (std::size_t t = 0; t < n->arity(); ++t)
        {
          if (t == r)
          {
            continue;
          }
          Strategy c = base;
          c.label    = "lie(" + n->id + ":" + std::to_string(t) + "->" + std::to_string(r) + ")";
          c.lies[n->id][static_cast<int>(t)] = r;
          lie_strategies.push_back(c);
        }
      }
    }
    for (auto const &st : lie_strategies)
    {
      add(st);
    }
  }
  if (family.disobedience)
  {
    for (auto const *n : real_decisions)
    {
      for (std::size_t c = 0; c < n->arity(); ++c)
      {
        Strategy st       = base;
        st.label          = "disobey(" + n->id + "->" + std::to_string(c) + ")";
        st.disobey[n->id] = c;
        add(st);
      }
    }
  }
  if (family.false_trees)
  {
    UtilityExpr const &u = base.application.utility;
    for (auto const *l : app_leaves)
    {
      for (Rat const d : {Rat(1), Rat(-1)})
      {
        add(with_app("leaf-cost(" + l->id + "," + detail::signed_str(d) + ")",
                     detail::with_leaf_cost(base.application.tree, l->id, d), u));
      }
      for (auto const *other : app_leaves)
      {
        if (other->result != l->result)
        {
          add(with_app("leaf-result(" + l->id + "<-" + other->id + ")",
                       transform_tree(base.application.tree,
                                      [&](TreeNode n) {
                                        if (n.id == l->id)
                                        {
                                          n.result = other->result;
                                        }
                                        return n;
                                      }),
                       u));
        }
      }
    }
    for (auto const *n : app_chances)
    {
      for (std::size_t a = 0; a < n->arity(); ++a)
      {
        for (std::size_t b = 0; b < n->arity(); ++b)
        {
          if (a != b)
          {
            add(with_app("prob(" + n->id + ":" + std::to_string(a) + "->" + std::to_string(b) + ")",
                         detail::with_shifted_mass(base.application.tree, n->id, a, b), u));
          }
        }
      }
    }
    // Fake points in front of the application: a gamble over two copies of
    // the tree and a choice between the tree and a copy with other costs.
    Rat const   t0   = detail::earliest_time(s) / Rat(2);
    std::string root = base.application.tree->id;
    for (Rat const g : {Rat(1), Rat(2)})
    {
      auto copy = [&](std::string const &tag, Rat const &d) {
        return transform_tree(base.application.tree, [&](TreeNode n) {
          n.id = tag + n.id;
          if (n.is_leaf())
          {
            n.cost = n.cost + d;
          }
          return n;
        });
      };
      add(with_app("gamble(" + g.str() + ")",
                   make_chance(j + "~gamble", t0, {{Rat(1, 2), copy("hi~", g)}, {Rat(1, 2), copy("lo~", -g)}}), u));
      Rat const d = g == Rat(1) ? Rat(1) : Rat(-1);
      add(with_app("fake-decision(" + detail::signed_str(d) + ")",
                   make_decision(j + "~choice", t0, {base.application.tree, copy("alt~", d)}), u));
    }
    for (Rat const f : {Rat(0), Rat(1, 2), Rat(2)})
    {
      add(with_app("scaled-costs(" + f.str() + ")", transform_tree(base.application.tree, [&](TreeNode n) {
                     n.cost = n.cost * f;
                     return n;
                   }),
                   u));
    }
    for (std::size_t k = 0; k < family.pool.size(); ++k)
    {
      add(with_app("pool(" + std::to_string(k) + ")", family.pool[k].tree, family.pool[k].utility));
    }
  }
  if (family.combinations && !lie_strategies.empty())
  {
    for (Rat const x : {Rat(1), Rat(-1)})
    {
      for (auto const &l : lie_strategies)
      {
        Strategy st    = l;
        st.label       = "shift(" + detail::signed_str(x) + ")+" + l.label;
        st.application = shift_application(l.application, x);
        add(st);
      }
    }
  }
  return out;
}

}  // namespace stochmech
