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

#include "stochmech/consortium.hpp"
#include "stochmech/mechanism.hpp"
#include "stochmech/scheduling.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochmech {

struct ExpectationReport
{
  std::string                 scenario;
  Mechanism                   mechanism = Mechanism::FirstPrice;
  bool                        exact     = true;
  std::size_t                 paths     = 0;  // outcome paths, or runs when sampled
  std::set<PlayerId>          accepted;
  std::map<PlayerId, ExtReal> expected_payoff;
  std::map<PlayerId, ExtReal> expected_delta_sum;  // accepted agents
  std::map<PlayerId, double>  payoff_stddev;       // sampled reports only
  ExtReal                     system;              // E p(Pl)
  ExtReal                     v_game;              // v(G)
  ExtReal                     v_app;               // v(app)
  ExtReal                     gap;                 // E p(Pl) - v(G)
  bool                        principal_invariant = true;  // p(C) equal on every path
  Rat                         total_probability;
};

namespace detail {

inline ExtReal gap_of(ExtReal const &a, ExtReal const &b)
{
  if (a.kind() == b.kind() && !a.finite())
  {
    return ExtReal(0);
  }
  return a - b;
}

}  // namespace detail

/// Exact expectations over every real chance path.
inline ExpectationReport exact_expectations(Scenario const &s, std::map<PlayerId, Strategy> const &strategies,
                                            Mechanism m)
{
  Execution         root(s, strategies, m);
  ExpectationReport rep;
  rep.scenario  = s.name;
  rep.mechanism = m;
  rep.accepted  = root.selection().accepted_ids;
  rep.v_app     = root.selection().value;
  rep.v_game    = game_value(s);
  for (auto const &a : s.agents)
  {
    rep.expected_payoff[a.player] = ExtReal(0);
  }
  rep.expected_payoff[s.principal.player] = ExtReal(0);
  std::optional<ExtReal> first_pc;
  for_each_outcome(root, [&](Trace const &t) {
    ++rep.paths;
    rep.total_probability = rep.total_probability + t.probability;
    ExtReal const w(t.probability);
    for (auto const &[y, p] : t.payoffs)
    {
      rep.expected_payoff[y] += w * p;
    }
    for (auto const &[i, d] : t.deltas)
    {
      Rat sum;
      for (auto const &x : d)
      {
        sum = sum + x;
      }
      rep.expected_delta_sum[i] += w * ExtReal(sum);
    }
    rep.system += w * t.system_payoff;
    if (!first_pc)
    {
      first_pc = t.principal_payoff;
    }
    else if (*first_pc != t.principal_payoff)
    {
      rep.principal_invariant = false;
    }
  });
  if (rep.total_probability != Rat(1))
  {
    throw InvariantBreach("outcome probabilities sum to " + rep.total_probability.str());
  }
  rep.gap = detail::gap_of(rep.system, rep.v_game);
  return rep;
}

/// Empirical means over `runs` sampled runs; run k draws from stream k of
/// `seed`, so results do not depend on evaluation order.
inline ExpectationReport monte_carlo(Scenario const &s, std::map<PlayerId, Strategy> const &strategies, Mechanism m,
                                     std::size_t runs, std::uint64_t seed)
{
  if (runs == 0)
  {
    throw std::invalid_argument("monte_carlo needs at least one run");
  }
  Execution         root(s, strategies, m);
  ExpectationReport rep;
  rep.scenario  = s.name;
  rep.mechanism = m;
  rep.exact     = false;
  rep.paths     = runs;
  rep.accepted  = root.selection().accepted_ids;
  rep.v_app     = root.selection().value;
  rep.v_game    = game_value(s);
  std::map<PlayerId, ExtReal> sums;
  std::map<PlayerId, ExtReal> delta_sums;
  std::map<PlayerId, double>  sq;
  ExtReal                     system;
  std::optional<ExtReal>      first_pc;
  for (auto const &a : s.agents)
  {
    sums[a.player] = ExtReal(0);
  }
  sums[s.principal.player] = ExtReal(0);
  for (std::size_t r = 0; r < runs; ++r)
  {
    Execution     ex = root;
    ChanceSampler rng(seed, r);
    while (auto const &p = ex.pending())
    {
      ex.resolve(rng.draw(p->probabilities));
    }
    Trace const t = ex.finish();
    for (auto const &[y, p] : t.payoffs)
    {
      sums[y] += p;
      if (p.finite())
      {
        sq[y] += p.value().to_double() * p.value().to_double();
      }
    }
    for (auto const &[i, d] : t.deltas)
    {
      Rat total;
      for (auto const &x : d)
      {
        total = total + x;
      }
      delta_sums[i] += ExtReal(total);
    }
    system += t.system_payoff;
    if (!first_pc)
    {
      first_pc = t.principal_payoff;
    }
    else if (*first_pc != t.principal_payoff)
    {
      rep.principal_invariant = false;
    }
  }
  ExtReal const inv(Rat(1, static_cast<std::int64_t>(runs)));
  double const  n = static_cast<double>(runs);
  for (auto const &[y, total] : sums)
  {
    rep.expected_payoff[y] = total * inv;
    if (total.finite())
    {
      double const mean   = total.value().to_double() / n;
      double const var    = std::max(0.0, sq[y] / n - mean * mean);
      rep.payoff_stddev[y] = std::sqrt(var);
    }
  }
  for (auto const &[i, total] : delta_sums)
  {
    rep.expected_delta_sum[i] = total * inv;
  }
  rep.system            = system * inv;
  rep.total_probability = Rat(1);
  rep.gap               = detail::gap_of(rep.system, rep.v_game);
  return rep;
}

struct DeviationOutcome
{
  std::string            label;
  bool                   participates = true;
  bool                   accepted     = false;
  ExtReal                payoff;
  std::optional<ExtReal> signed_value;
  ExtReal                system;
};

struct EquilibriumReport
{
  std::string                   scenario;
  PlayerId                      agent;
  Mechanism                     mechanism = Mechanism::SecondPrice;
  std::size_t                   family_size = 0;
  ExtReal                       equilibrium_payoff;
  ExtReal                       best_deviation_payoff;
  std::string                   best_deviation;
  ExtReal                       cap;  // v(G) - v((t,u)_{-j})
  bool                          cap_respected = true;
  bool                          cap_tight     = false;  // equality at cost price
  bool                          system_bounded = true;  // E p(Pl) <= v(G) for every deviation
  std::optional<bool>           signed_value_bound;     // first price only
  std::vector<DeviationOutcome> outcomes;

  bool        no_improvement() const { return best_deviation_payoff <= equilibrium_payoff; }
  std::string verdict() const { return no_improvement() ? "no-improvement" : "counterexample"; }
  std::string scope() const { return "over family F (" + std::to_string(family_size) + " strategies)"; }
};

/// Evaluates every deviation of `j` with the other agents fixed to
/// `others` (cost price by default).
inline EquilibriumReport check_equilibrium(Scenario const &s, Mechanism m, PlayerId const &j,
                                           DeviationFamily const &family,
                                           std::optional<std::map<PlayerId, Strategy>> others = std::nullopt)
{
  PlayerType const *truth = s.agent(j);
  if (truth == nullptr)
  {
    throw std::invalid_argument("unknown agent '" + j + "'");
  }
  std::map<PlayerId, Strategy> profile = others.value_or(std::map<PlayerId, Strategy>{});
  for (auto const &a : s.agents)
  {
    if (profile.count(a.player) == 0)
    {
      profile.emplace(a.player, cost_price(a));
    }
  }
  Strategy const base       = cost_price(*truth);
  auto const     deviations = enumerate_deviations(s, j, base, family);
  if (deviations.empty())
  {
    throw std::invalid_argument("deviation family is empty");
  }

  EquilibriumReport rep;
  rep.scenario    = s.name;
  rep.agent       = j;
  rep.mechanism   = m;
  rep.family_size = deviations.size();
  auto const sel  = select_accepted(s);
  ExtReal const v_g     = sel.value;
  ExtReal const v_minus = sel.valuations.at(j).v_minus_i;
  rep.cap               = detail::gap_of(v_g, v_minus);
  rep.best_deviation_payoff = ExtReal::neg_inf();

  for (auto const &dev : deviations)
  {
    profile[j]                 = dev;
    ExpectationReport const ex = exact_expectations(s, profile, m);
    DeviationOutcome        out;
    out.label        = dev.label;
    out.participates = dev.participate;
    out.accepted     = ex.accepted.count(j) > 0;
    out.payoff       = ex.expected_payoff.at(j);
    out.system       = ex.system;
    if (dev.participate)
    {
      std::vector<Application> apps;
      for (auto const &a : s.agents)
      {
        if (profile.at(a.player).participate)
        {
          apps.push_back(profile.at(a.player).application);
        }
      }
      out.signed_value = select_accepted(s.principal, apps).valuations.at(j).signed_value;
    }
    if (out.system > v_g)
    {
      rep.system_bounded = false;
    }
    if (&dev == &deviations.front())
    {
      rep.equilibrium_payoff = out.payoff;
      if (m == Mechanism::SecondPrice)
      {
        rep.cap_tight = out.payoff == rep.cap;
      }
      else if (out.signed_value)
      {
        ExtReal const sv = *out.signed_value;
        rep.cap_tight    = sv >= ExtReal(0) ? sv == rep.cap : rep.cap == ExtReal(0);
      }
    }
    else if (out.payoff > rep.best_deviation_payoff)
    {
      rep.best_deviation_payoff = out.payoff;
      rep.best_deviation        = dev.label;
    }
    if (m == Mechanism::SecondPrice && out.payoff > rep.cap)
    {
      rep.cap_respected = false;
    }
    if (m != Mechanism::SecondPrice && out.signed_value && out.payoff >= ExtReal(0))
    {
      bool const ok          = *out.signed_value <= rep.cap;
      rep.signed_value_bound = rep.signed_value_bound.value_or(true) && ok;
    }
    rep.outcomes.push_back(std::move(out));
  }
  return rep;
}

struct CoalitionRow
{
  Rat     x;
  ExtReal second_pair;       // pair total, second price, separate agents
  ExtReal second_gain;       // over the x = 0 baseline
  ExtReal first_pair;        // pair total, first price, separate agents
  ExtReal consortium_first;  // consortium payoff, first price, asking x less
};

struct CoalitionReport
{
  PlayerId                  a;
  PlayerId                  b;
  ExtReal                   baseline_second;
  ExtReal                   baseline_first;
  ExtReal                   separate_value;    // v(app) with both at cost price
  ExtReal                   consortium_value;  // v(app) with the consortium at cost price
  std::vector<CoalitionRow> rows;
};

/// The pair exploit: `a` asks x less whenever `b` is accepted, `b` stays at
/// cost price. Compared with the same shift by a first-price consortium.
inline CoalitionReport coalition_exploit_report(Scenario const &s, PlayerId const &a, PlayerId const &b,
                                                std::vector<Rat> const &xs)
{
  PlayerType const *ta = s.agent(a);
  PlayerType const *tb = s.agent(b);
  if (ta == nullptr || tb == nullptr || a == b)
  {
    throw std::invalid_argument("coalition report needs two distinct agents of the scenario");
  }
  {
    Scenario pair = s;
    pair.agents   = {*ta, *tb};
    auto const g  = Game::of(pair);
    ValueEngine e(g);
    ExtReal const none = e.subset_value(0);
    if (e.subset_value(1) >= none || e.subset_value(2) >= none)
    {
      throw std::invalid_argument("agents '" + a + "' and '" + b + "' are not complementary");
    }
  }
  auto profile = all_cost_price(s);
  auto pair_total = [&](Mechanism m, Rat const &x) {
    auto p = profile;
    if (!x.is_zero())
    {
      p[a] = fair_like(*ta, ta->utility + UtilityExpr::parse("if present(" + b + ") then " + x.str() + " else 0"));
    }
    auto const rep = exact_expectations(s, p, m);
    return rep.expected_payoff.at(a) + rep.expected_payoff.at(b);
  };
  PlayerId const cid = a + "_" + b;
  Scenario const merged = with_consortium(s, {a, b}, cid);

  CoalitionReport rep;
  rep.a               = a;
  rep.b               = b;
  rep.baseline_second = pair_total(Mechanism::SecondPrice, Rat(0));
  rep.baseline_first  = pair_total(Mechanism::FirstPrice, Rat(0));
  rep.separate_value  = select_accepted(s).value;
  rep.consortium_value = select_accepted(merged).value;
  for (auto const &x : xs)
  {
    CoalitionRow row;
    row.x           = x;
    row.second_pair = pair_total(Mechanism::SecondPrice, x);
    row.second_gain = detail::gap_of(row.second_pair, rep.baseline_second);
    row.first_pair  = pair_total(Mechanism::FirstPrice, x);
    auto p          = all_cost_price(merged);
    p[cid]          = fair_like(*merged.agent(cid), merged.agent(cid)->utility.plus(x));
    row.consortium_first = exact_expectations(merged, p, Mechanism::FirstPrice).expected_payoff.at(cid);
    rep.rows.push_back(row);
  }
  return rep;
}

struct SchedulingReport
{
  ExtReal engine_value;               // v(app) of the general engine
  std::set<ExtReal> principal_payoffs;  // p(C) over every outcome path
  ExtReal           g1_of_g2;         // closed form from the simplified applications
  std::map<Rat, ExtReal> g2;           // at each possible C1
};

/// Runs the sequential scenario with fair applications and compares the
/// principal's payoff against g1(g2).
inline SchedulingReport check_sequential(SequentialSpec const &spec, Rat const &profit1, Rat const &profit2)
{
  Scenario const s = build_sequential_scenario(spec);
  std::map<PlayerId, Strategy> profile{{spec.first, fair(*s.agent(spec.first), profit1)},
                                       {spec.second, fair(*s.agent(spec.second), profit2)}};
  SchedulingReport rep;
  Execution        root(s, profile, Mechanism::FirstPrice);
  rep.engine_value = root.selection().value;
  for_each_outcome(root, [&](Trace const &t) { rep.principal_payoffs.insert(t.principal_payoff); });
  for (auto const &[c, p] : spec.completion)
  {
    rep.g2[c] = simplified_g2(spec, c, profit2);
  }
  rep.g1_of_g2 = simplified_g1(spec, [&](Rat const &c) { return rep.g2.at(c); }, profit1);
  return rep;
}

/// Seed-deterministic small scenarios: 1-3 agents, trees of height <= 3,
/// branching 2-3, costs on a small grid, a trivial principal tree.
class ScenarioGenerator
{
public:
  explicit ScenarioGenerator(std::uint64_t seed)
    : rng_(ChanceSampler::mix(seed))
  {}

  Scenario next(std::string const &name)
  {
    std::size_t const n = 1 + uniform(3);
    std::vector<PlayerId> ids;
    for (std::size_t k = 0; k < n; ++k)
    {
      ids.push_back(std::string(1, static_cast<char>('a' + k)));
    }
    // Distinct fractional offsets keep every event time unique while
    // letting the agents' events interleave.
    std::vector<std::int64_t> slots(60);
    for (std::size_t k = 0; k < slots.size(); ++k)
    {
      slots[k] = static_cast<std::int64_t>(k + 1);
    }
    for (std::size_t k = slots.size() - 1; k > 0; --k)
    {
      std::swap(slots[k], slots[uniform(k + 1)]);
    }
    next_slot_ = 0;
    slots_     = slots;

    Scenario s;
    s.name        = name;
    s.description = "generated";
    for (auto const &id : ids)
    {
      counter_ = 0;
      s.agents.push_back({id, tree(id, 0), UtilityExpr()});
    }
    s.principal = {kDefaultPrincipalId, make_leaf("C.idle", ResultLabel{}, Rat(0)), principal_utility(ids)};
    return s;
  }

private:
  std::size_t uniform(std::size_t n)
  {
    std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = rng_();
    while (x >= limit)
    {
      x = rng_();
    }
    return static_cast<std::size_t>(x % n);
  }

  template <typename T>
  T const &pick(std::vector<T> const &v)
  {
    return v[uniform(v.size())];
  }

  NodePtr tree(PlayerId const &id, std::size_t depth)
  {
    std::string const name = id + std::to_string(counter_++);
    bool const        leaf = depth == 3 || (depth > 0 && uniform(3) == 0) || (depth == 0 && uniform(6) == 0);
    if (leaf)
    {
      static std::vector<Rat> const costs{Rat(0), Rat(1), Rat(2), Rat(3), Rat(5), Rat(1, 2), Rat(3, 2), Rat(7, 2)};
      return make_leaf(name, status(uniform(2) == 0 ? "success" : "failure"), pick(costs));
    }
    Rat const t = Rat(static_cast<std::int64_t>(depth + 1)) + Rat(slots_.at(next_slot_++), 61);
    std::size_t const arity = 2 + uniform(2);
    if (uniform(2) == 0)
    {
      std::vector<NodePtr> kids;
      for (std::size_t k = 0; k < arity; ++k)
      {
        kids.push_back(tree(id, depth + 1));
      }
      return make_decision(name, t, std::move(kids));
    }
    static std::vector<std::vector<Rat>> const two{
        {Rat(1, 2), Rat(1, 2)}, {Rat(1, 3), Rat(2, 3)}, {Rat(1, 4), Rat(3, 4)}, {Rat(9, 10), Rat(1, 10)}};
    static std::vector<std::vector<Rat>> const three{
        {Rat(1, 3), Rat(1, 3), Rat(1, 3)}, {Rat(1, 2), Rat(1, 4), Rat(1, 4)}, {Rat(1, 5), Rat(2, 5), Rat(2, 5)}};
    auto const &probs = pick(arity == 2 ? two : three);
    std::vector<std::pair<Rat, NodePtr>> branches;
    for (std::size_t k = 0; k < arity; ++k)
    {
      branches.emplace_back(probs[k], tree(id, depth + 1));
    }
    return make_chance(name, t, std::move(branches));
  }

  static ResultLabel status(std::string const &s) { return result_of("status", s); }

  UtilityExpr principal_utility(std::vector<PlayerId> const &ids)
  {
    auto ok = [](PlayerId const &p) { return "present(" + p + ") and r[" + p + "].status = 'success'"; };
    static std::vector<Rat> const weights{Rat(4), Rat(6), Rat(8), Rat(10), Rat(15), Rat(20), Rat(25, 2)};
    std::string expr;
    switch (uniform(3))
    {
    case 0:
      for (auto const &p : ids)
      {
        expr += (expr.empty() ? "" : " + ") + std::string("(if ") + ok(p) + " then " + pick(weights).str() +
                " else 0)";
      }
      break;
    case 1:
    {
      std::string all;
      for (auto const &p : ids)
      {
        all += (all.empty() ? "" : " and ") + ok(p);
      }
      expr = "if " + all + " then " + (pick(weights) * Rat(2)).str() + " else 0";
      break;
    }
    default:
    {
      expr = "if " + ok(ids[0]) + " then " + pick(weights).str() + " else 0";
      for (std::size_t k = 1; k < ids.size(); ++k)
      {
        expr += " + (if " + ok(ids[0]) + " and " + ok(ids[k]) + " then " + pick(weights).str() + " else 0)";
      }
      break;
    }
    }
    return UtilityExpr::parse(expr);
  }

  std::mt19937_64          rng_;
  std::vector<std::int64_t> slots_;
  std::size_t              next_slot_ = 0;
  std::size_t              counter_   = 0;
};

inline std::vector<Scenario> random_corpus(std::uint64_t seed, std::size_t count)
{
  ScenarioGenerator       gen(seed);
  std::vector<Scenario>   out;
  for (std::size_t k = 0; k < count; ++k)
  {
    out.push_back(gen.next("rand-" + std::to_string(k)));
  }
  return out;
}

}  // namespace stochmech
