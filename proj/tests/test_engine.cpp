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

#include "stochmech.hpp"

#include "gtest/gtest.h"

#include <functional>

using namespace stochmech;

namespace {

struct Fixture
{
  Scenario                 scenario;
  std::vector<Application> apps;
  Selection                selection;
};

Fixture fair_fig1()
{
  Fixture f;
  f.scenario = fig1_scenario();
  for (auto const &a : f.scenario.agents)
  {
    f.apps.push_back(fair(a, Rat(2)).application);
  }
  f.selection = select_accepted(f.scenario.principal, f.apps);
  return f;
}

std::vector<Trace> all_traces(Scenario const &s, std::map<PlayerId, Strategy> const &strat, Mechanism m)
{
  std::vector<Trace> out;
  for_each_outcome(Execution(s, strat, m), [&](Trace const &t) { out.push_back(t); });
  return out;
}

Trace forced(Scenario const &s, std::map<PlayerId, Strategy> const &strat, Mechanism m,
             std::map<std::string, std::size_t> const &picks)
{
  return run_forced(Execution(s, strat, m), [&](Execution::Pending const &p) {
    auto it = picks.find(p.node);
    return it == picks.end() ? std::size_t{0} : it->second;
  });
}

ExtReal expected_principal(std::vector<Trace> const &traces)
{
  ExtReal e;
  for (auto const &t : traces)
  {
    e += ExtReal(t.probability) * t.principal_payoff;
  }
  return e;
}

}  // namespace

TEST(ValueEngine, StateValues)
{
  EXPECT_EQ(fair_fig1().selection.value, ExtReal(2));
  EXPECT_EQ(game_value(rail_scenario()), ExtReal(Rat(-10299, 100)));
  EXPECT_EQ(game_value(triv_scenario()), ExtReal(6));
  EXPECT_EQ(game_value(coal_scenario()), ExtReal(10));
}

TEST(ValueEngine, Fig1OptimalProfile)
{
  Fixture const     f = fair_fig1();
  ValueEngine const &e = *f.selection.engine;
  GameState const   st = f.selection.initial();
  EXPECT_EQ(e.best_choice(st), 1u);
  GameState const prep = st.advance(1);
  EXPECT_EQ(e.best_choice(prep.advance(0)), 0u);
  EXPECT_EQ(e.best_choice(prep.advance(1)), 1u);
  EXPECT_EQ(e.value(st.advance(0)), ExtReal(1));
  EXPECT_EQ(e.value(prep), ExtReal(2));
  EXPECT_THROW(e.best_choice(prep), std::invalid_argument);
}

TEST(ValueEngine, ChanceDeltas)
{
  Fixture const      f  = fair_fig1();
  ValueEngine const &e  = *f.selection.engine;
  GameState const    at2 = f.selection.initial().advance(1);
  EXPECT_EQ(e.chance_deltas(at2), (std::vector<ExtReal>{ExtReal(12), ExtReal(-12)}));
  GameState const at_try = at2.advance(0).advance(0);
  EXPECT_EQ(e.chance_deltas(at_try), (std::vector<ExtReal>{ExtReal(30), ExtReal(-30)}));
  EXPECT_THROW(e.chance_delta(f.selection.initial(), 0), std::invalid_argument);

  Selection const rail = select_accepted(rail_scenario());
  EXPECT_EQ(rail.engine->chance_deltas(rail.initial()),
            (std::vector<ExtReal>{ExtReal(Rat(199, 100)), ExtReal(Rat(-19701, 100))}));
}

TEST(ValueEngine, LocalIdentities)
{
  for (auto const &d : bundled_demos())
  {
    Selection const sel = select_accepted(d.scenario);
    EXPECT_GT(verify_local_identities(*sel.engine, sel.initial()), 0u) << d.name;
  }
  Fixture const f = fair_fig1();
  EXPECT_GT(verify_local_identities(*f.selection.engine, f.selection.initial()), 0u);
}

TEST(ValueEngine, InvariantAlongOptimalPaths)
{
  Fixture const      f = fair_fig1();
  ValueEngine const &e = *f.selection.engine;
  ExtReal const      v0 = e.value(f.selection.initial());
  std::function<void(GameState const &, ExtReal)> walk = [&](GameState const &st, ExtReal sum) {
    EXPECT_EQ(e.value(st) - sum, v0);
    Expansion const x = expand(st);
    if (x.kind == Expansion::Kind::DecisionPoint)
    {
      walk(x.successors[e.best_choice(st)], sum);
    }
    else if (x.kind == Expansion::Kind::ChancePoint)
    {
      for (std::size_t k = 0; k < x.successors.size(); ++k)
      {
        walk(x.successors[k], sum + e.chance_delta(st, k));
      }
    }
  };
  walk(f.selection.initial(), ExtReal(0));
}

TEST(ValueEngine, MemoStatistics)
{
  Selection const sel = select_accepted(fig1_scenario());
  MemoStats const s   = sel.engine->stats();
  EXPECT_GT(s.states, 0u);
  EXPECT_GT(s.decisions, 0u);
  EXPECT_GT(s.chances, 0u);
}

TEST(Selection, Fig1Fair)
{
  Fixture const f = fair_fig1();
  EXPECT_EQ(f.selection.accepted_ids, (std::set<PlayerId>{"1", "2"}));
  auto const &v1 = f.selection.valuations.at("1");
  EXPECT_EQ(v1.v_all, ExtReal(2));
  EXPECT_EQ(v1.v_minus_i, ExtReal(0));
  EXPECT_EQ(v1.surplus, ExtReal(2));
  EXPECT_EQ(v1.signed_value, ExtReal(2));
  EXPECT_TRUE(v1.accepted);
  EXPECT_EQ(f.selection.subset_values.size(), 4u);
  EXPECT_EQ(f.selection.subset_values[2], ExtReal(-7));
}

TEST(Selection, Coal)
{
  Selection const sel = select_accepted(coal_scenario());
  EXPECT_EQ(sel.accepted_ids, (std::set<PlayerId>{"A", "B"}));
  EXPECT_EQ(sel.valuations.at("A").surplus, ExtReal(10));
  EXPECT_EQ(sel.valuations.at("B").surplus, ExtReal(10));

  Scenario const           s = coal_scenario();
  for (Rat const x : {Rat(1), Rat(5), Rat(100)})
  {
    std::vector<Application> apps{shift_application(Application::truthful(s.agents[0]), x),
                                  Application::truthful(s.agents[1])};
    EXPECT_EQ(select_accepted(s.principal, apps).valuations.at("A").surplus, ExtReal(Rat(10) + x));
  }
}

TEST(Selection, NoAgents)
{
  Scenario s = triv_scenario();
  s.agents.clear();
  s.principal.utility = UtilityExpr::constant(Rat(3));
  Selection const sel = select_accepted(s);
  EXPECT_TRUE(sel.accepted_ids.empty());
  EXPECT_EQ(sel.value, ExtReal(3));
}

TEST(Selection, UselessAgentRejected)
{
  Scenario s = triv_scenario();
  s.agents.push_back({"b", make_leaf("b.work", status("done"), Rat(1)), UtilityExpr()});
  Selection const sel = select_accepted(s);
  EXPECT_EQ(sel.accepted_ids, (std::set<PlayerId>{"a"}));
  EXPECT_FALSE(sel.valuations.at("b").accepted);
  EXPECT_EQ(sel.valuations.at("b").signed_value, ExtReal(-1));
  EXPECT_EQ(sel.valuations.at("b").surplus, ExtReal(0));
}

TEST(Selection, TieBreakSmallestThenLexicographic)
{
  Scenario s;
  s.name              = "tie";
  s.principal         = {"C", make_leaf("C.idle", ResultLabel{}, Rat(0)),
                         UtilityExpr::parse("if present(x) or present(y) then 10 else 0")};
  s.agents.push_back({"y", make_leaf("y.w", status("done"), Rat(4)), UtilityExpr()});
  s.agents.push_back({"x", make_leaf("x.w", status("done"), Rat(4)), UtilityExpr()});
  Selection const sel = select_accepted(s);
  EXPECT_EQ(sel.accepted_ids, (std::set<PlayerId>{"x"}));
  EXPECT_EQ(sel.value, ExtReal(6));
  EXPECT_EQ(sel.valuations.at("x").signed_value, ExtReal(0));
  EXPECT_EQ(sel.valuations.at("y").signed_value, ExtReal(0));

  Scenario z = s;
  z.agents[0].tree = make_leaf("y.w", status("done"), Rat(10));
  z.agents[1].tree = make_leaf("x.w", status("done"), Rat(10));
  Selection const none = select_accepted(z);
  EXPECT_TRUE(none.accepted_ids.empty());
  EXPECT_EQ(none.value, ExtReal(0));
}

TEST(Selection, ShiftCovariance)
{
  Scenario const s = fig1_scenario();
  for (Rat const x : {Rat(1), Rat(3, 2), Rat(-1)})
  {
    std::vector<Application> apps{shift_application(Application::truthful(s.agents[0]), -x),
                                  Application::truthful(s.agents[1])};
    Selection const sel = select_accepted(s.principal, apps);
    EXPECT_EQ(sel.value + ExtReal(x), game_value(s));
    EXPECT_EQ(sel.valuations.at("1").signed_value + ExtReal(x),
              select_accepted(s).valuations.at("1").signed_value);
  }
}

TEST(Mechanism, Fig1FirstPricePayments)
{
  Scenario const s     = fig1_scenario();
  auto const     strat = all_fair(s, Rat(2));
  Trace const    win   = forced(s, strat, Mechanism::FirstPrice, {{"2.work", 0}, {"1.try", 0}});
  EXPECT_EQ(win.payment("1"), ExtReal(39));
  EXPECT_EQ(win.payment("2"), ExtReal(19));
  EXPECT_EQ(win.principal_payoff, ExtReal(2));
  Trace const lose = forced(s, strat, Mechanism::FirstPrice, {{"2.work", 0}, {"1.try", 1}});
  EXPECT_EQ(lose.payment("1"), ExtReal(-21));
  EXPECT_EQ(lose.payment("2"), ExtReal(19));
  EXPECT_EQ(lose.principal_payoff, ExtReal(2));
  Trace const idle = forced(s, strat, Mechanism::FirstPrice, {{"2.work", 1}});
  EXPECT_EQ(idle.payment("1"), ExtReal(3));
  EXPECT_EQ(idle.payment("2"), ExtReal(-5));
  EXPECT_EQ(idle.principal_payoff, ExtReal(2));
  EXPECT_EQ(payment(win, "1").base, ExtReal(9));
  EXPECT_EQ(payment(win, "1").delta_sum, Rat(30));
  EXPECT_EQ(win.deltas.at("2"), (std::vector<Rat>{Rat(12)}));
}

TEST(Mechanism, RailPayments)
{
  Scenario const s     = rail_scenario();
  auto const     strat = all_cost_price(s);
  Trace const    ok    = forced(s, strat, Mechanism::FirstPrice, {{"i.build", 0}});
  EXPECT_EQ(ok.payment("i"), ExtReal(Rat(10199, 100)));
  EXPECT_EQ(ok.payment("j"), ExtReal(1));
  Trace const repaired = forced(s, strat, Mechanism::FirstPrice, {{"i.build", 1}, {"j.repair", 0}});
  EXPECT_EQ(repaired.payment("i"), ExtReal(Rat(-9701, 100)));
  EXPECT_EQ(repaired.payment("j"), ExtReal(200));
  Trace const missed = forced(s, strat, Mechanism::FirstPrice, {{"i.build", 1}, {"j.repair", 1}});
  EXPECT_EQ(missed.payment("j"), ExtReal(-9800));
  for (Trace const *t : {&ok, &repaired, &missed})
  {
    EXPECT_EQ(t->principal_payoff, ExtReal(Rat(-10299, 100)));
  }
}

TEST(Mechanism, TrivSecondPrice)
{
  Scenario const s = triv_scenario();
  Trace const    t = run_mechanism(s, all_cost_price(s), Mechanism::SecondPrice, 1);
  EXPECT_EQ(t.payment("a"), ExtReal(10));
  EXPECT_EQ(payment(t, "a").bonus, ExtReal(6));
  EXPECT_EQ(t.payoff("a"), ExtReal(6));
  EXPECT_EQ(t.principal_payoff, ExtReal(0));
  EXPECT_THROW(t.payment("zz"), std::invalid_argument);
}

TEST(Mechanism, PayoffEquations)
{
  for (auto const &d : bundled_demos())
  {
    for (Mechanism m : {Mechanism::FirstPrice, Mechanism::SecondPrice})
    {
      for (auto const &t : all_traces(d.scenario, d.strategies, m))
      {
        ExtReal paid;
        ExtReal total;
        for (auto const &a : d.scenario.agents)
        {
          if (t.accepted.count(a.player) == 0)
          {
            EXPECT_EQ(t.payoff(a.player), ExtReal(0));
            continue;
          }
          EXPECT_EQ(t.payoff(a.player), t.utilities.at(a.player) + t.payment(a.player));
          paid += t.payment(a.player);
          total += t.payoff(a.player);
        }
        EXPECT_EQ(t.principal_payoff, t.utilities.at(t.principal) - paid);
        EXPECT_EQ(t.system_payoff, total + t.principal_payoff);
      }
    }
  }
}

TEST(Mechanism, SecondPriceAddsSurplus)
{
  Scenario const s     = fig1_scenario();
  auto const     strat = all_fair(s, Rat(2));
  for (std::uint64_t seed = 0; seed < 8; ++seed)
  {
    Trace const first  = run_mechanism(s, strat, Mechanism::FirstPrice, seed);
    Trace const second = run_mechanism(s, strat, Mechanism::SecondPrice, seed);
    for (auto const &i : first.accepted)
    {
      EXPECT_EQ(second.payment(i) - first.payment(i), first.valuations.at(i).surplus);
    }
  }
}

TEST(Mechanism, DeterministicGivenSeed)
{
  Scenario const s     = rail_scenario();
  auto const     strat = all_cost_price(s);
  for (std::uint64_t seed : {1u, 2u, 99u})
  {
    EXPECT_EQ(trace_to_json(run_mechanism(s, strat, Mechanism::FirstPrice, seed)).dump(),
              trace_to_json(run_mechanism(s, strat, Mechanism::FirstPrice, seed)).dump());
  }
}

TEST(Mechanism, MissingStrategy)
{
  Scenario const s = fig1_scenario();
  auto           strat = all_fair(s, Rat(2));
  strat.erase("2");
  EXPECT_THROW(run_mechanism(s, strat, Mechanism::FirstPrice, 0), std::invalid_argument);
}

TEST(Mechanism, DisobedienceForfeits)
{
  Scenario const s     = rail_scenario();
  auto           strat = all_cost_price(s);
  strat.at("j").disobey["j.inspect"] = 0;
  strat.at("j").label                = "skip-repair";
  Trace const t = forced(s, strat, Mechanism::FirstPrice, {{"i.build", 1}, {"j.repair", 0}});
  EXPECT_TRUE(t.payment("j").is_neg_inf());
  EXPECT_TRUE(payment(t, "j").mismatch);
  EXPECT_TRUE(t.principal_payoff.is_pos_inf());
  EXPECT_EQ(t.presumed_path.back().node, "j.repair");
  EXPECT_NE(t.real_path.back().node, "j.repair");
}

TEST(Mechanism, LyingDivergesPaths)
{
  Scenario const s     = fig1_scenario();
  auto           strat = all_fair(s, Rat(2));
  strat.at("2").lies["2.work"][1] = 0;
  Trace const t = forced(s, strat, Mechanism::FirstPrice, {{"2.work", 1}});
  EXPECT_EQ(t.real_results.at("2"), status("failure"));
  EXPECT_EQ(t.presumed_results.at("2"), status("success"));
  EXPECT_TRUE(t.payment("2").is_neg_inf());
  EXPECT_TRUE(payment(t, "2").mismatch);
}

TEST(Mechanism, RelianceAnnouncements)
{
  Scenario const s     = fig1_scenario();
  auto const     strat = all_fair(s, Rat(2));
  Trace const    t     = forced(s, strat, Mechanism::FirstPriceReliance, {{"2.work", 0}, {"1.try", 0}});
  std::vector<std::vector<Rat>> announced;
  for (auto const &m : t.messages)
  {
    if (m.kind == Message::Kind::DeltaAnnouncement)
    {
      announced.push_back(m.deltas);
    }
  }
  ASSERT_EQ(announced.size(), 2u);
  EXPECT_EQ(announced[0], (std::vector<Rat>{Rat(12), Rat(-12)}));
  EXPECT_EQ(announced[1], (std::vector<Rat>{Rat(30), Rat(-30)}));
  for (auto const &i : t.accepted)
  {
    EXPECT_EQ(reliance_payment(t, i), t.payment(i));
  }
  Selection const sel = select_accepted(s.principal, {strat.at("1").application, strat.at("2").application});
  GameState const at2 = sel.initial().advance(1);
  EXPECT_EQ(announce_deltas(*sel.engine, at2), (std::vector<Rat>{Rat(12), Rat(-12)}));
  EXPECT_THROW(announce_deltas(*sel.engine, sel.initial()), std::invalid_argument);
}

TEST(Mechanism, RelianceRecomputeUnderLies)
{
  Scenario const s     = rail_scenario();
  auto           strat = all_cost_price(s);
  strat.at("i").lies["i.build"][1] = 0;
  for (auto const &t : all_traces(s, strat, Mechanism::FirstPriceReliance))
  {
    for (auto const &i : t.accepted)
    {
      EXPECT_EQ(reliance_payment(t, i), t.payment(i));
    }
  }
}

TEST(Mechanism, MonteCarloSamplerIsExact)
{
  ChanceSampler rng(5, 0);
  std::vector<Rat> const probs{Rat(1, 3), Rat(2, 3)};
  std::size_t            hits = 0;
  for (int k = 0; k < 3000; ++k)
  {
    hits += rng.draw(probs) == 0;
  }
  EXPECT_NEAR(hits / 3000.0, 1.0 / 3.0, 0.03);
  ChanceSampler a(7, 1), b(7, 1), c(7, 2);
  std::vector<std::size_t> xa, xb, xc;
  for (int k = 0; k < 20; ++k)
  {
    xa.push_back(a.draw(probs));
    xb.push_back(b.draw(probs));
    xc.push_back(c.draw(probs));
  }
  EXPECT_EQ(xa, xb);
  EXPECT_NE(xa, xc);
}

namespace {

NodePtr try_subtree(Rat success, Rat extra_cost)
{
  return make_chance("1.try", Rat(5),
                     {{success, make_leaf("1.try.ok", status("success"), Rat(7) + extra_cost)},
                      {Rat(1) - success, make_leaf("1.try.fail", status("failure"), Rat(7) + extra_cost)}});
}

Rat modification_of(Trace const &t, PlayerId const &i) { return payment(t, i).modification; }

}  // namespace

TEST(Modification, IdenticalCopyChangesNothing)
{
  Scenario const s    = fig1_scenario();
  auto const     base = all_fair(s, Rat(2));
  auto           mod  = base;
  mod.at("1").modifications.push_back({"1.try", try_subtree(Rat(1, 2), Rat(0))});
  auto const a = all_traces(s, base, Mechanism::FirstPrice);
  auto const b = all_traces(s, mod, Mechanism::FirstPrice);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k)
  {
    EXPECT_EQ(a[k].payments.size(), b[k].payments.size());
    for (auto const &[i, p] : a[k].payments)
    {
      EXPECT_EQ(p.total(), b[k].payment(i));
    }
    EXPECT_EQ(modification_of(b[k], "1"), Rat(0));
    EXPECT_EQ(a[k].principal_payoff, b[k].principal_payoff);
  }
}

TEST(Modification, BetterSubtreeIsPaidFor)
{
  Scenario const s   = fig1_scenario();
  auto           mod = all_fair(s, Rat(2));
  mod.at("1").modifications.push_back({"1.try", try_subtree(Rat(3, 4), Rat(0))});
  auto const traces = all_traces(s, mod, Mechanism::FirstPrice);
  EXPECT_EQ(expected_principal(traces), ExtReal(2));
  bool seen = false;
  for (auto const &t : traces)
  {
    EXPECT_EQ(t.principal_payoff, ExtReal(2));
    if (t.real_results.at("2") == status("success"))
    {
      EXPECT_EQ(modification_of(t, "1"), Rat(15));
      seen = true;
    }
    else
    {
      EXPECT_EQ(modification_of(t, "1"), Rat(0));
    }
  }
  EXPECT_TRUE(seen);
}

TEST(Modification, WorseSubtreeIsRefunded)
{
  Scenario const s   = fig1_scenario();
  auto           mod = all_fair(s, Rat(2));
  mod.at("1").modifications.push_back({"1.try", try_subtree(Rat(1, 2), Rat(1))});
  Trace const t = forced(s, mod, Mechanism::FirstPrice, {{"2.work", 0}, {"1.try", 0}});
  EXPECT_EQ(modification_of(t, "1"), Rat(-1));
  EXPECT_EQ(t.principal_payoff, ExtReal(2));
}

TEST(Modification, InvalidSubtreeRejected)
{
  Scenario const s = fig1_scenario();
  Execution      ex(s, all_fair(s, Rat(2)), Mechanism::FirstPrice);
  ASSERT_TRUE(ex.pending());
  EXPECT_EQ(ex.pending()->node, "2.work");
  EXPECT_THROW(ex.apply_modification("1", make_decision("1.x", Rat(2), {make_leaf("1.y", status("x"), Rat(0))})),
               std::invalid_argument);
  Rat const zero = ex.apply_modification("1", find_node(s.agents[0].tree, "1.prep"));
  EXPECT_EQ(zero, Rat(0));
  EXPECT_THROW(ex.apply_modification("zz", s.agents[0].tree), std::invalid_argument);
}
