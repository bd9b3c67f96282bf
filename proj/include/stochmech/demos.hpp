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

#include "stochmech/scheduling.hpp"
#include "stochmech/strategy.hpp"

#include <map>
#include <string>
#include <vector>

namespace stochmech {

struct Demo
{
  std::string                  name;
  Scenario                     scenario;
  std::map<PlayerId, Strategy> strategies;
  std::string                  provenance;
};

inline ResultLabel status(std::string const &s) { return result_of("status", s); }

/// Two tasks, both needed for a gain of 60. The first agent may work
/// directly (cost 5) or prepare (cost 1) and later try (further cost 6).
inline Scenario fig1_scenario()
{
  Scenario s;
  s.name        = "fig1";
  s.description = "Two complementary tasks worth 60 together; agent 1 may work directly or prepare and try later.";
  s.principal   = {kDefaultPrincipalId, make_leaf("C.idle", ResultLabel{}, Rat(0)),
                   UtilityExpr::parse("if present(1) and present(2) and r[1].status = 'success' and "
                                      "r[2].status = 'success' then 60 else 0")};
  NodePtr direct = make_chance("1.direct", Rat(2),
                               {{Rat(1, 2), make_leaf("1.direct.ok", status("success"), Rat(5))},
                                {Rat(1, 2), make_leaf("1.direct.fail", status("failure"), Rat(5))}});
  NodePtr attempt = make_chance("1.try", Rat(5),
                                {{Rat(1, 2), make_leaf("1.try.ok", status("success"), Rat(7))},
                                 {Rat(1, 2), make_leaf("1.try.fail", status("failure"), Rat(7))}});
  NodePtr prep = make_decision("1.prep", Rat(4), {attempt, make_leaf("1.notry", status("failure"), Rat(1))});
  s.agents.push_back({"1", make_decision("1.root", Rat(1), {direct, prep}), UtilityExpr()});
  s.agents.push_back({"2",
                      make_chance("2.work", Rat(3),
                                  {{Rat(1, 2), make_leaf("2.ok", status("success"), Rat(5))},
                                   {Rat(1, 2), make_leaf("2.fail", status("failure"), Rat(5))}}),
                      UtilityExpr()});
  return s;
}

/// Railroad unit: i builds (1% faulty, loss 10000), j inspects and repairs.
inline Scenario rail_scenario()
{
  Scenario s;
  s.name        = "rail";
  s.description = "Agent i builds a unit (1% faulty, loss 10000); agent j may inspect and repair.";
  s.principal   = {kDefaultPrincipalId, make_leaf("C.idle", ResultLabel{}, Rat(0)),
                   UtilityExpr::parse("if present(i) and r[i].build = 'ok' then 0 else if present(i) and "
                                      "present(j) and r[j].repair = 'done' then 0 else -10000")};
  s.agents.push_back({"i",
                      make_chance("i.build", Rat(1),
                                  {{Rat(99, 100), make_leaf("i.ok", result_of("build", "ok"), Rat(100))},
                                   {Rat(1, 100), make_leaf("i.faulty", result_of("build", "faulty"), Rat(100))}}),
                      UtilityExpr()});
  NodePtr repair = make_chance("j.repair", Rat(3),
                               {{Rat(99, 100), make_leaf("j.done", result_of("repair", "done"), Rat(101))},
                                {Rat(1, 100), make_leaf("j.missed", result_of("repair", "missed"), Rat(1))}});
  s.agents.push_back(
      {"j", make_decision("j.inspect", Rat(2), {make_leaf("j.none", result_of("repair", "none"), Rat(1)), repair}),
       UtilityExpr()});
  return s;
}

/// Two agents that are useless without each other.
inline Scenario coal_scenario()
{
  Scenario s;
  s.name        = "coal";
  s.description = "Two complementary single-step tasks; the principal gains 20 only if both are done.";
  s.principal   = {kDefaultPrincipalId, make_leaf("C.idle", ResultLabel{}, Rat(0)),
                   UtilityExpr::parse("if present(A) and present(B) then 20 else 0")};
  s.agents.push_back({"A", make_leaf("A.work", status("done"), Rat(5)), UtilityExpr()});
  s.agents.push_back({"B", make_leaf("B.work", status("done"), Rat(5)), UtilityExpr()});
  return s;
}

inline Scenario sched_scenario() { return build_sequential_scenario(sched_demo_spec()); }

/// One agent, one leaf: cost 4, worth 10 to the principal.
inline Scenario triv_scenario()
{
  Scenario s;
  s.name        = "triv";
  s.description = "One agent with a single certain step.";
  s.principal   = {kDefaultPrincipalId, make_leaf("C.idle", ResultLabel{}, Rat(0)),
                   UtilityExpr::parse("if present(a) and r[a].status = 'done' then 10 else 0")};
  s.agents.push_back({"a", make_leaf("a.work", status("done"), Rat(4)), UtilityExpr()});
  return s;
}

inline std::vector<Demo> bundled_demos()
{
  std::vector<Demo> out;
  Scenario          f = fig1_scenario();
  out.push_back({"fig1", f, all_fair(f, Rat(2)),
                 "Two-task worked example: agent 1 asks 2 beyond cost, agent 2 asks 7 for a task costing 5."});
  Scenario r = rail_scenario();
  out.push_back({"rail", r, all_cost_price(r), "Controlling and controlled agents, both at cost price."});
  Scenario c = coal_scenario();
  out.push_back({"coal", c, all_cost_price(c), "Complementary pair used for the coalition exploit."});
  Scenario q = sched_scenario();
  out.push_back({"sched", q, all_fair(q, Rat(1)), "Sequential tasks with fair applications, profit 1 each."});
  return out;
}

inline Demo const &find_demo(std::vector<Demo> const &demos, std::string const &name)
{
  for (auto const &d : demos)
  {
    if (d.name == name)
    {
      return d;
    }
  }
  throw std::invalid_argument("unknown demo '" + name + "' (expected fig1, rail, coal or sched)");
}

}  // namespace stochmech
