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

std::string src(char const *rel) { return std::string(STOCHMECH_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST(Expectations, Fig1Fair)
{
  Scenario const          s = fig1_scenario();
  ExpectationReport const r = exact_expectations(s, all_fair(s, Rat(2)), Mechanism::FirstPrice);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.paths, 3u);
  EXPECT_EQ(r.expected_payoff.at("C"), ExtReal(2));
  EXPECT_EQ(r.expected_payoff.at("1"), ExtReal(2));
  EXPECT_EQ(r.expected_payoff.at("2"), ExtReal(2));
  EXPECT_EQ(r.system, ExtReal(6));
  EXPECT_EQ(r.v_game, ExtReal(6));
  EXPECT_EQ(r.v_app, ExtReal(2));
  EXPECT_EQ(r.gap, ExtReal(0));
  EXPECT_TRUE(r.principal_invariant);
  EXPECT_EQ(r.total_probability, Rat(1));
}

TEST(Expectations, RailCostPrice)
{
  Scenario const          s = rail_scenario();
  ExpectationReport const r = exact_expectations(s, all_cost_price(s), Mechanism::FirstPrice);
  EXPECT_EQ(r.paths, 3u);
  EXPECT_EQ(r.expected_payoff.at("i"), ExtReal(0));
  EXPECT_EQ(r.expected_payoff.at("j"), ExtReal(0));
  EXPECT_EQ(r.expected_payoff.at("C"), ExtReal(Rat(-10299, 100)));
  EXPECT_EQ(r.system, r.v_game);
}

TEST(Expectations, DeltaSumsVanish)
{
  for (auto const &d : bundled_demos())
  {
    for (Mechanism m : {Mechanism::FirstPrice, Mechanism::SecondPrice, Mechanism::FirstPriceReliance})
    {
      ExpectationReport const r = exact_expectations(d.scenario, all_cost_price(d.scenario), m);
      for (auto const &[i, e] : r.expected_delta_sum)
      {
        EXPECT_EQ(e, ExtReal(0)) << d.name << " " << i;
      }
    }
  }
}

TEST(Expectations, SystemNeverExceedsGameValue)
{
  for (auto const &s : random_corpus(7, 40))
  {
    for (Rat x : {Rat(0), Rat(1), Rat(-3)})
    {
      ExpectationReport const r = exact_expectations(s, all_fair(s, x), Mechanism::FirstPrice);
      EXPECT_LE(r.system, r.v_game) << s.name;
    }
  }
}

TEST(MonteCarlo, Fig1PrincipalConstant)
{
  Scenario const          s     = fig1_scenario();
  auto const              strat = all_fair(s, Rat(2));
  std::size_t const       runs  = 10000;
  ExpectationReport const mc    = monte_carlo(s, strat, Mechanism::FirstPrice, runs, 42);
  EXPECT_FALSE(mc.exact);
  EXPECT_EQ(mc.paths, runs);
  EXPECT_EQ(mc.expected_payoff.at("C"), ExtReal(2));
  EXPECT_DOUBLE_EQ(mc.payoff_stddev.at("C"), 0.0);
  EXPECT_TRUE(mc.principal_invariant);

  // Exact spread of agent 1's payoff: 3/4 on the no-try path, otherwise
  // 2 + 30 or 2 - 30 with probability 1/4 each.
  double const sigma = std::sqrt(0.5 * 0 + 0.25 * 900 + 0.25 * 900);
  double const mean  = mc.expected_payoff.at("1").value().to_double();
  EXPECT_NEAR(mean, 2.0, 3 * sigma / std::sqrt(double(runs)));

  ExpectationReport const again = monte_carlo(s, strat, Mechanism::FirstPrice, runs, 42);
  EXPECT_EQ(again.expected_payoff, mc.expected_payoff);
  EXPECT_THROW(monte_carlo(s, strat, Mechanism::FirstPrice, 0, 1), std::invalid_argument);
}

TEST(MonteCarlo, TrivIsConstant)
{
  Scenario const          s  = triv_scenario();
  ExpectationReport const mc = monte_carlo(s, all_cost_price(s), Mechanism::SecondPrice, 50, 3);
  EXPECT_EQ(mc.expected_payoff.at("a"), ExtReal(6));
  EXPECT_EQ(mc.expected_payoff.at("C"), ExtReal(0));
  for (auto const &[y, sd] : mc.payoff_stddev)
  {
    EXPECT_DOUBLE_EQ(sd, 0.0) << y;
  }
}

TEST(Equilibrium, Fig1SecondPrice)
{
  Scenario const        s   = fig1_scenario();
  DeviationFamily const fam = deviation_family_from_json(read_json_file(src("dev/fig1.json")));
  for (PlayerId const j : {"1", "2"})
  {
    EquilibriumReport const r = check_equilibrium(s, Mechanism::SecondPrice, j, fam);
    EXPECT_EQ(r.verdict(), "no-improvement") << j << " " << r.best_deviation;
    EXPECT_TRUE(r.cap_respected);
    EXPECT_TRUE(r.cap_tight);
    EXPECT_TRUE(r.system_bounded);
    EXPECT_EQ(r.cap, r.equilibrium_payoff);
    EXPECT_NE(r.scope().find("over family F"), std::string::npos);
  }
  EXPECT_EQ(check_equilibrium(s, Mechanism::SecondPrice, "1", fam).cap, ExtReal(6));
}

TEST(Equilibrium, RailSecondPriceWithDisobedience)
{
  Scenario const          s = rail_scenario();
  EquilibriumReport const r = check_equilibrium(s, Mechanism::SecondPrice, "i", DeviationFamily{});
  EXPECT_TRUE(r.no_improvement());
  EXPECT_TRUE(r.cap_respected);
  bool forfeits = false;
  for (auto const &o : r.outcomes)
  {
    forfeits = forfeits || o.payoff.is_neg_inf();
  }
  EXPECT_TRUE(forfeits);
}

TEST(Equilibrium, FirstPriceSignedValueBound)
{
  Scenario const          s = fig1_scenario();
  EquilibriumReport const r = check_equilibrium(s, Mechanism::FirstPrice, "1", DeviationFamily{});
  EXPECT_EQ(r.verdict(), "counterexample");
  ASSERT_TRUE(r.signed_value_bound.has_value());
  EXPECT_TRUE(*r.signed_value_bound);
  EXPECT_TRUE(r.cap_tight);
}

TEST(Equilibrium, CoalJointShiftIsCounterexample)
{
  Scenario const s = coal_scenario();
  auto           others = all_cost_price(s);
  others.at("B") = fair_like(*s.agent("B"), s.agent("B")->utility + UtilityExpr::constant(Rat(1)));
  ExpectationReport const base  = exact_expectations(s, all_cost_price(s), Mechanism::SecondPrice);
  ExpectationReport const joint = exact_expectations(s, others, Mechanism::SecondPrice);
  ExtReal const pair_base  = base.expected_payoff.at("A") + base.expected_payoff.at("B");
  ExtReal const pair_joint = joint.expected_payoff.at("A") + joint.expected_payoff.at("B");
  EXPECT_EQ(pair_joint - pair_base, ExtReal(1));
}

TEST(Equilibrium, UnknownAgent)
{
  EXPECT_THROW(check_equilibrium(coal_scenario(), Mechanism::SecondPrice, "Z", DeviationFamily{}),
               std::invalid_argument);
}

TEST(Coalition, Exploit)
{
  CoalitionReport const r = coalition_exploit_report(coal_scenario(), "A", "B", {Rat(0), Rat(1), Rat(5), Rat(100)});
  EXPECT_EQ(r.baseline_second, ExtReal(20));
  EXPECT_EQ(r.separate_value, r.consortium_value);
  ASSERT_EQ(r.rows.size(), 4u);
  for (auto const &row : r.rows)
  {
    EXPECT_EQ(row.second_gain, ExtReal(row.x));
    EXPECT_LE(row.first_pair, r.baseline_first);
    if (row.x > Rat(0))
    {
      EXPECT_LT(row.consortium_first, ExtReal(0));
    }
  }
  EXPECT_THROW(coalition_exploit_report(triv_scenario(), "a", "a", {}), std::invalid_argument);
  Scenario two = triv_scenario();
  two.agents.push_back({"b", make_leaf("b.work", status("done"), Rat(1)), UtilityExpr()});
  EXPECT_THROW(coalition_exploit_report(two, "a", "b", {Rat(1)}), std::invalid_argument);
}

TEST(Scheduling, DemoMatchesSimplifiedForms)
{
  SchedulingReport const r = check_sequential(sched_demo_spec(), Rat(1), Rat(1));
  ASSERT_EQ(r.principal_payoffs.size(), 1u);
  EXPECT_EQ(*r.principal_payoffs.begin(), r.g1_of_g2);
  EXPECT_EQ(r.engine_value, r.g1_of_g2);
  EXPECT_EQ(r.g1_of_g2, ExtReal(Rat(43, 2)));
}

TEST(Scheduling, DeterministicFirstTask)
{
  SequentialSpec spec = sched_demo_spec();
  spec.completion     = {{Rat(2), Rat(1)}};
  auto const h        = [&](Rat const &c) { return simplified_g2(spec, c, Rat(0)); };
  EXPECT_EQ(simplified_g1(spec, h, Rat(1)), h(Rat(2)) - ExtReal(Rat(3) + Rat(1)));
  SchedulingReport const r = check_sequential(spec, Rat(1), Rat(0));
  EXPECT_EQ(r.engine_value, r.g1_of_g2);
  EXPECT_EQ(r.principal_payoffs, (std::set<ExtReal>{r.g1_of_g2}));
}

TEST(Scheduling, InfeasibleStartIsNeverChosen)
{
  Scenario const s     = sched_scenario();
  auto const     strat = all_cost_price(s);
  bool           infeasible_exists = false;
  std::function<void(GameState const &)> walk = [&](GameState const &st) {
    Expansion const e = expand(st);
    if (e.kind == Expansion::Kind::End)
    {
      infeasible_exists = infeasible_exists || endstate_system_payoff(st).is_neg_inf();
    }
    for (auto const &n : e.successors)
    {
      walk(n);
    }
  };
  walk(select_accepted(s).initial());
  EXPECT_TRUE(infeasible_exists);
  for_each_outcome(Execution(s, strat, Mechanism::FirstPrice),
                   [](Trace const &t) { EXPECT_TRUE(t.system_payoff.finite()); });
}

TEST(Scheduling, RejectsIncreasingGain)
{
  SequentialSpec spec = sched_demo_spec();
  spec.u_prime[Rat(13, 2)] = Rat(50);
  EXPECT_THROW(build_sequential_scenario(spec), std::invalid_argument);
}

TEST(Generator, DeterministicAndBounded)
{
  auto const a = random_corpus(99, 30);
  auto const b = random_corpus(99, 30);
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t k = 0; k < a.size(); ++k)
  {
    EXPECT_EQ(serialize_scenario(a[k]), serialize_scenario(b[k]));
    EXPECT_TRUE(validate_scenario(a[k]).empty());
    EXPECT_LE(a[k].agents.size(), 3u);
    for (auto const &ag : a[k].agents)
    {
      std::size_t depth = 0;
      std::function<void(TreeNode const &, std::size_t)> go = [&](TreeNode const &n, std::size_t d) {
        depth = std::max(depth, d);
        EXPECT_LE(n.children.size(), 3u);
        for (auto const &c : n.children)
        {
          go(*c, d + 1);
        }
      };
      go(*ag.tree, 0);
      EXPECT_LE(depth, 3u);
    }
  }
  EXPECT_NE(serialize_scenario(random_corpus(100, 1)[0]), serialize_scenario(a[0]));
}

TEST(Reports, JsonNumbers)
{
  Json const j = number_json(ExtReal(Rat(10199, 100)));
  EXPECT_EQ(j.at("exact"), "10199/100");
  EXPECT_EQ(j.at("decimal"), "101.99");
  EXPECT_FALSE(number_json(ExtReal(Rat(1, 3))).contains("decimal"));
  EXPECT_EQ(number_json(ExtReal::neg_inf()).at("exact"), "-inf");
}

TEST(Reports, TraceJsonFields)
{
  Scenario const s = rail_scenario();
  Trace const    t = run_mechanism(s, all_cost_price(s), Mechanism::FirstPriceReliance, 4);
  Json const     j = trace_to_json(t);
  for (char const *k : {"scenario", "mechanism", "accepted", "messages", "presumed_path", "real_path", "payments",
                        "payoffs", "principal_payoff"})
  {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j.at("mechanism"), "first-reliance");
  EXPECT_EQ(j.at("principal_payoff").at("decimal"), "-102.99");
  EXPECT_FALSE(trace_table(t).empty());
  EquilibriumReport const r = check_equilibrium(coal_scenario(), Mechanism::SecondPrice, "A", DeviationFamily{});
  EXPECT_EQ(equilibrium_json(r).at("verdict"), "no-improvement");
}
