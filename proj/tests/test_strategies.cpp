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

#include <cmath>

using namespace stochmech;

namespace {

ExtReal leaf_value(Application const &a, std::string const &leaf)
{
  NodePtr const n = find_node(a.tree, leaf);
  return eval_utility(a.utility, *n, {});
}

std::vector<Trace> all_traces(Scenario const &s, std::map<PlayerId, Strategy> const &strat, Mechanism m)
{
  std::vector<Trace> out;
  for_each_outcome(Execution(s, strat, m), [&](Trace const &t) { out.push_back(t); });
  return out;
}

Strategy const *find_label(std::vector<Strategy> const &v, std::string const &label)
{
  for (auto const &s : v)
  {
    if (s.label == label)
    {
      return &s;
    }
  }
  return nullptr;
}

/// Agent b's true chance is 3/5 but it applies with 1/2; a bets on b.
Scenario bet_scenario()
{
  Scenario s;
  s.name      = "bet";
  s.principal = {"C", make_leaf("C.idle", ResultLabel{}, Rat(0)),
                 UtilityExpr::parse("if present(a) and present(b) then 10 else 0")};
  s.agents.push_back({"a", make_leaf("a.work", status("done"), Rat(4)), UtilityExpr()});
  s.agents.push_back({"b", make_chance("b.run", Rat(1),
                                       {{Rat(3, 5), make_leaf("b.ok", status("ok"), Rat(1))},
                                        {Rat(2, 5), make_leaf("b.bad", status("bad"), Rat(1))}}),
                      UtilityExpr()});
  return s;
}

std::map<PlayerId, Strategy> bet_profile(Scenario const &s, Rat const &stake)
{
  std::map<PlayerId, Strategy> out = all_cost_price(s);
  Strategy &b   = out.at("b");
  b.label       = "presumed-even";
  b.application = Application::arbitrary("b", make_chance("b.run", Rat(1),
                                                          {{Rat(1, 2), make_leaf("b.ok", status("ok"), Rat(1))},
                                                           {Rat(1, 2), make_leaf("b.bad", status("bad"), Rat(1))}}),
                                         UtilityExpr());
  out.at("a") = betting_tilt(out.at("a"), "b", "status", Atom(std::string("ok")), Rat(1, 2), stake);
  return out;
}

}  // namespace

TEST(Strategies, CostPriceIsTruthfulAndObedient)
{
  Scenario const s  = rail_scenario();
  Strategy const cp = cost_price(s.agents[0]);
  EXPECT_EQ(cp.label, "cost_price");
  EXPECT_TRUE(cp.participate);
  EXPECT_TRUE(cp.obedient());
  EXPECT_TRUE(tree_equal(*cp.application.tree, *s.agents[0].tree));
  EXPECT_EQ(cp.report("i.build", 1), 1u);
  EXPECT_EQ(cp.execute("j.inspect", 1), 1u);

  Strategy const f1 = cost_price(fig1_scenario().agents[0]);
  EXPECT_EQ(leaf_value(f1.application, "1.direct.ok"), ExtReal(-5));
  EXPECT_EQ(leaf_value(f1.application, "1.notry"), ExtReal(-1));
  EXPECT_EQ(leaf_value(f1.application, "1.try.ok"), ExtReal(-7));
}

TEST(Strategies, FairAsksProfitMore)
{
  Scenario const s = fig1_scenario();
  Strategy const f = fair(s.agents[0], Rat(2));
  EXPECT_EQ(f.label, "fair(2)");
  EXPECT_TRUE(f.obedient());
  EXPECT_EQ(leaf_value(f.application, "1.direct.ok"), ExtReal(-7));
  EXPECT_EQ(leaf_value(f.application, "1.notry"), ExtReal(-3));
  EXPECT_EQ(leaf_value(f.application, "1.try.ok"), ExtReal(-9));
  Strategy const f2 = fair(s.agents[1], Rat(2));
  EXPECT_EQ(leaf_value(f2.application, "2.ok"), ExtReal(-7));
  EXPECT_EQ(leaf_value(f2.application, "2.fail"), ExtReal(-7));
  EXPECT_EQ(fair(s.agents[0], Rat(0)).label, "cost_price");
}

TEST(Strategies, FairLikeAndOptOut)
{
  Scenario const s  = coal_scenario();
  Strategy const fl = fair_like(s.agents[0], UtilityExpr::parse("-own.cost - 3"));
  EXPECT_EQ(leaf_value(fl.application, "A.work"), ExtReal(-8));
  EXPECT_TRUE(fl.obedient());
  Strategy const out = opt_out(s.agents[0]);
  EXPECT_FALSE(out.participate);
  auto strat = all_cost_price(s);
  strat.at("A") = out;
  Trace const t = run_mechanism(s, strat, Mechanism::FirstPrice, 0);
  EXPECT_TRUE(t.accepted.empty());
  EXPECT_EQ(t.payoff("A"), ExtReal(0));
}

TEST(Strategies, ObedientStrategiesNeverMismatch)
{
  for (auto const &d : bundled_demos())
  {
    for (auto const &t : all_traces(d.scenario, d.strategies, Mechanism::FirstPrice))
    {
      for (auto const &[i, p] : t.payments)
      {
        EXPECT_FALSE(p.mismatch) << d.name << " " << i;
      }
      EXPECT_TRUE(t.violations.empty());
    }
  }
}

TEST(Strategies, ReportAndExecuteTables)
{
  Strategy s = cost_price(fig1_scenario().agents[1]);
  s.lies["2.work"][1] = 0;
  EXPECT_EQ(s.report("2.work", 1), 0u);
  EXPECT_EQ(s.report("2.work", 0), 0u);
  s.lies["2.work"][-1] = 1;
  EXPECT_EQ(s.report("2.work", 0), 1u);
  EXPECT_EQ(s.report("2.work", 1), 0u);
  EXPECT_EQ(s.report("elsewhere", std::nullopt), 0u);
  s.disobey["x"] = 2;
  EXPECT_EQ(s.execute("x", 0), 2u);
  EXPECT_EQ(s.execute("y", std::nullopt), 0u);
  EXPECT_FALSE(s.obedient());
}

TEST(WorthFn, AffineReproducesFairPayment)
{
  WorthFn const id = WorthFn::affine(Rat(1), Rat(0));
  EXPECT_EQ(reasonable_ask(id, Rat(9), {Rat(30)}), Rat(39));
  WorthFn const scaled = WorthFn::affine(Rat(3), Rat(-7));
  EXPECT_EQ(reasonable_ask(scaled, Rat(9), {Rat(30)}), Rat(19));
  EXPECT_EQ(reasonable_ask(scaled, Rat(9), {Rat(90)}), Rat(39));
  EXPECT_THROW(WorthFn::affine(Rat(0), Rat(0)), std::invalid_argument);
}

TEST(WorthFn, Exponential)
{
  WorthFn const h = WorthFn::exponential(0, 1, 1);
  EXPECT_DOUBLE_EQ(reasonable_ask_approx(h, 5, {}), 5);
  for (double d : {-2.0, -0.5, 0.25, 0.75})
  {
    EXPECT_NEAR(reasonable_ask_approx(h, 0, {d}), -std::log(1 - d), 1e-12);
  }
  double prev = -1e9;
  for (double d = -3; d < 0.99; d += 0.1)
  {
    double const ask = reasonable_ask_approx(h, 0, {d});
    EXPECT_GT(ask, prev);
    prev = ask;
  }
  EXPECT_THROW(reasonable_ask_approx(h, 0, {1.5}), std::domain_error);
  EXPECT_THROW(reasonable_ask(h, Rat(0), {}), std::logic_error);
  EXPECT_THROW(WorthFn::exponential(0, -1, 1), std::invalid_argument);
}

TEST(Consortium, Singleton)
{
  Scenario const   s = triv_scenario();
  PlayerType const k = consortium({s.agents[0]}, "K");
  ASSERT_EQ(k.tree->kind, NodeKind::Decision);
  ASSERT_EQ(k.tree->children.size(), 2u);
  EXPECT_EQ(k.tree->children[0]->id, "0:none");
  Scenario const merged = with_consortium(s, {"a"}, "K");
  EXPECT_TRUE(validate_scenario(merged).empty());
  EXPECT_EQ(game_value(merged), game_value(s));
}

TEST(Consortium, CoalPairValueEqualsSeparate)
{
  Scenario const s      = coal_scenario();
  Scenario const merged = with_consortium(s, {"A", "B"}, "AB");
  ASSERT_EQ(merged.agents.size(), 1u);
  EXPECT_TRUE(validate_scenario(merged).empty());
  EXPECT_EQ(game_value(merged), ExtReal(10));
  EXPECT_EQ(game_value(merged), game_value(s));
}

TEST(Consortium, Fig1Branches)
{
  Scenario s = fig1_scenario();
  for (auto &a : s.agents)
  {
    a = fair(a, Rat(2)).application.as_type();
  }
  Scenario const merged = with_consortium(s, {"1", "2"}, "K");
  PlayerType const &k = merged.agents.at(0);
  ASSERT_EQ(k.tree->children.size(), 4u);
  Selection const sel = select_accepted(merged);
  EXPECT_EQ(sel.value, ExtReal(2));
  GameState const st = sel.initial();
  ASSERT_EQ(st.frontier()[1], k.tree.get());
  EXPECT_EQ(sel.engine->value(st.advance(3)), ExtReal(2));
  EXPECT_EQ(sel.engine->best_choice(st), 3u);
}

TEST(Consortium, CorpusValueEquality)
{
  std::size_t checked = 0;
  for (auto const &s : random_corpus(2026, 60))
  {
    if (s.agents.size() < 2)
    {
      continue;
    }
    std::vector<PlayerId> const ids{s.agents[0].player, s.agents[1].player};
    EXPECT_EQ(game_value(with_consortium(s, ids, "K")), game_value(s)) << s.name;
    ++checked;
  }
  EXPECT_GT(checked, 10u);
}

TEST(Consortium, Errors)
{
  Scenario s = coal_scenario();
  EXPECT_THROW(consortium({}, "K"), std::invalid_argument);
  s.agents[0].tree = make_chance("A.c", Rat(3), {{Rat(1), make_leaf("A.x", status("done"), Rat(1))}});
  s.agents[1].tree = make_chance("B.c", Rat(3), {{Rat(1), make_leaf("B.x", status("done"), Rat(1))}});
  EXPECT_THROW(consortium({s.agents[0], s.agents[1]}, "K"), std::invalid_argument);
}

TEST(Deviations, CountingShifts)
{
  Scenario const  s    = fig1_scenario();
  Strategy const  base = fair(s.agents[1], Rat(2));
  DeviationFamily f;
  f.shifts            = {Rat(-2), Rat(-1), Rat(1), Rat(2)};
  f.contingent_shifts = {};
  f.lies = f.disobedience = f.false_trees = f.combinations = false;
  auto const devs = enumerate_deviations(s, "2", base, f);
  ASSERT_EQ(devs.size(), 6u);
  EXPECT_EQ(devs.front().label, "fair(2)");
  EXPECT_NE(find_label(devs, "opt-out"), nullptr);
  EXPECT_NE(find_label(devs, "shift(-2)"), nullptr);
  EXPECT_NE(find_label(devs, "shift(+1)"), nullptr);
}

TEST(Deviations, FullFamilyIsLargeAndDistinct)
{
  for (auto const &d : bundled_demos())
  {
    for (auto const &a : d.scenario.agents)
    {
      auto const devs = enumerate_deviations(d.scenario, a.player, cost_price(a), DeviationFamily{});
      EXPECT_GE(devs.size(), 30u) << d.name << " " << a.player;
      std::set<std::string> labels;
      for (auto const &v : devs)
      {
        EXPECT_TRUE(labels.insert(v.label).second) << v.label;
        std::vector<std::string> problems;
        validate_tree(*v.application.tree, a.player, problems);
        EXPECT_TRUE(problems.empty()) << v.label;
      }
    }
  }
}

TEST(Deviations, ChanceLieDiverges)
{
  Scenario const s    = fig1_scenario();
  auto const     devs = enumerate_deviations(s, "2", cost_price(s.agents[1]), DeviationFamily{});
  Strategy const *lie = find_label(devs, "lie(2.work:1->0)");
  ASSERT_NE(lie, nullptr);
  auto strat   = all_cost_price(s);
  strat.at("2") = *lie;
  bool diverged = false;
  for (auto const &t : all_traces(s, strat, Mechanism::FirstPrice))
  {
    diverged = diverged || t.real_results.at("2") != t.presumed_results.at("2");
  }
  EXPECT_TRUE(diverged);
}

TEST(Deviations, RailDisobedienceForfeits)
{
  Scenario const  s    = rail_scenario();
  auto const      devs = enumerate_deviations(s, "j", cost_price(s.agents[1]), DeviationFamily{});
  Strategy const *skip = find_label(devs, "disobey(j.inspect->0)");
  ASSERT_NE(skip, nullptr);
  auto strat    = all_cost_price(s);
  strat.at("j") = *skip;
  bool forfeited = false;
  for (auto const &t : all_traces(s, strat, Mechanism::FirstPrice))
  {
    forfeited = forfeited || t.payment("j").is_neg_inf();
  }
  EXPECT_TRUE(forfeited);
}

TEST(BettingTilt, PreservesSignedValue)
{
  Scenario const s    = bet_scenario();
  auto const     base = bet_profile(s, Rat(0));
  auto const     tilt = bet_profile(s, Rat(5));
  EXPECT_EQ(betting_tilt(base.at("a"), "b", "status", Atom(std::string("ok")), Rat(1, 2), Rat(0)).label,
            base.at("a").label);
  auto signed_of = [&](std::map<PlayerId, Strategy> const &p) {
    return select_accepted(s.principal, {p.at("a").application, p.at("b").application}).valuations.at("a");
  };
  EXPECT_EQ(signed_of(tilt).signed_value, signed_of(base).signed_value);
  EXPECT_EQ(signed_of(tilt).surplus, signed_of(base).surplus);
  EXPECT_THROW(betting_tilt(base.at("a"), "b", "status", Atom(std::string("ok")), Rat(1), Rat(1)),
               std::invalid_argument);
}

TEST(BettingTilt, GainsUnderTrueOdds)
{
  Scenario const s    = bet_scenario();
  Rat const      stake(5);
  auto const     base = exact_expectations(s, bet_profile(s, Rat(0)), Mechanism::FirstPrice);
  auto const     tilt = exact_expectations(s, bet_profile(s, stake), Mechanism::FirstPrice);
  EXPECT_EQ(tilt.expected_payoff.at("a") - base.expected_payoff.at("a"), ExtReal(Rat(1, 5) * stake));
  for (auto const &t : all_traces(s, bet_profile(s, stake), Mechanism::FirstPrice))
  {
    ExtReal const shift = t.real_results.at("b") == status("ok") ? ExtReal(stake) : ExtReal(-stake);
    EXPECT_EQ(t.payoff("a"), shift);
  }
}

TEST(StrategyFiles, ParseKinds)
{
  Scenario const s = rail_scenario();
  Json const     j = Json::parse(R"({"strategies": {
      "j": {"kind": "custom", "label": "skip", "disobey": {"j.inspect": 0}, "lies": {"j.repair": {"*": 1}}}}})");
  auto const strat = strategies_from_json(j, s);
  EXPECT_EQ(strat.at("i").label, "cost_price");
  EXPECT_EQ(strat.at("j").label, "skip");
  EXPECT_EQ(strat.at("j").disobey.at("j.inspect"), 0u);
  EXPECT_EQ(strat.at("j").report("j.repair", 0), 1u);

  Scenario const f  = fig1_scenario();
  auto const     fs = strategies_from_json(Json::parse(R"({"strategies": {"1": {"kind": "fair", "profit": "2"},
      "2": {"kind": "fair_like", "utility": "-own.cost - 2"}}})"), f);
  EXPECT_EQ(leaf_value(fs.at("1").application, "1.try.ok"), ExtReal(-9));
  EXPECT_EQ(leaf_value(fs.at("2").application, "2.ok"), ExtReal(-7));

  auto const opt = strategies_from_json(Json::parse(R"({"strategies": {"1": {"kind": "opt_out"}}})"), f);
  EXPECT_FALSE(opt.at("1").participate);
  EXPECT_THROW(strategies_from_json(Json::parse(R"({"strategies": {"9": {"kind": "opt_out"}}})"), f), ScenarioError);
  EXPECT_THROW(strategies_from_json(Json::parse(R"({"strategies": {"1": {"kind": "magic"}}})"), f), ScenarioError);
}

TEST(StrategyFiles, BundledFilesLoad)
{
  for (auto const &d : bundled_demos())
  {
    auto const strat = strategies_from_json(
        read_json_file(std::string(STOCHMECH_SOURCE_DIR) + "/strategies/" + d.name + ".json"), d.scenario);
    EXPECT_EQ(strat.size(), d.scenario.agents.size());
  }
  auto const fam = deviation_family_from_json(read_json_file(std::string(STOCHMECH_SOURCE_DIR) + "/dev/coal.json"));
  EXPECT_EQ(fam.shifts.size(), 4u);
  EXPECT_FALSE(fam.lies);
  EXPECT_EQ(fam.pool.size(), 1u);
}
