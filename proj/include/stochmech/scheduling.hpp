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
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stochmech {

/// Distribution over a finite grid: (value, probability) pairs.
using Distribution = std::vector<std::pair<Rat, Rat>>;

struct StartOption
{
  Rat          start;      // time the second agent may begin
  Distribution durations;  // duration -> probability
  Rat          cost;
};

/// Two tasks in sequence: the second may start only once the first is done.
struct SequentialSpec
{
  PlayerId             first  = "1";
  PlayerId             second = "2";
  Distribution         completion;  // C1 -> probability
  Rat                  first_cost;
  std::vector<StartOption> starts;  // increasing start times
  std::map<Rat, Rat>   u_prime;     // C2 -> principal's gain, non-increasing
  Rat                  chance_offset{1, 4};
};

namespace detail {

inline void check_distribution(Distribution const &d, std::string const &what)
{
  if (d.empty())
  {
    throw std::invalid_argument(what + " is empty");
  }
  Rat sum;
  for (auto const &[v, p] : d)
  {
    if (p <= Rat(0))
    {
      throw std::invalid_argument(what + " has a non-positive probability");
    }
    sum = sum + p;
  }
  if (sum != Rat(1))
  {
    throw std::invalid_argument(what + " sums to " + sum.str());
  }
}

/// `if r[p].attr = v1 then u1 else if ... else u_last` over a finite table.
inline std::string table_expr(std::string const &ref, std::map<Rat, Rat> const &table)
{
  std::string out;
  std::size_t k = 0;
  for (auto const &[x, y] : table)
  {
    if (++k == table.size())
    {
      out += y.str();
    }
    else
    {
      out += "if " + ref + " = " + x.str() + " then " + y.str() + " else ";
    }
  }
  return out;
}

}  // namespace detail

inline Scenario build_sequential_scenario(SequentialSpec const &spec)
{
  detail::check_distribution(spec.completion, "completion distribution");
  if (spec.starts.empty())
  {
    throw std::invalid_argument("the second task needs at least one start option");
  }
  for (auto const &o : spec.starts)
  {
    detail::check_distribution(o.durations, "duration distribution at start " + o.start.str());
  }
  for (std::size_t k = 1; k < spec.starts.size(); ++k)
  {
    if (spec.starts[k].start <= spec.starts[k - 1].start)
    {
      throw std::invalid_argument("start options must have increasing times");
    }
  }
  std::optional<Rat> prev;
  for (auto const &[c, u] : spec.u_prime)
  {
    if (prev && u > *prev)
    {
      throw std::invalid_argument("u' must be non-increasing, but u'(" + c.str() + ") = " + u.str() +
                                  " exceeds the value before it");
    }
    prev = u;
  }
  Distribution completion = spec.completion;
  std::sort(completion.begin(), completion.end());
  if (spec.starts.back().start < completion.back().first)
  {
    throw std::invalid_argument("the last start option precedes the latest possible completion of the first task");
  }
  for (auto const &o : spec.starts)
  {
    for (auto const &[d, p] : o.durations)
    {
      if (spec.u_prime.count(o.start + d) == 0)
      {
        throw std::invalid_argument("u' is not tabulated at C2 = " + (o.start + d).str());
      }
    }
  }

  PlayerId const &a = spec.first;
  PlayerId const &b = spec.second;

  // First agent: one chance node per support point, "done" or "not yet".
  std::function<NodePtr(std::size_t, Rat)> ladder1 = [&](std::size_t m, Rat remaining) -> NodePtr {
    auto const &[c, p] = completion[m];
    ResultLabel r      = result_of("C1", c);
    NodePtr     done   = make_leaf(a + ".done@" + c.str(), r, spec.first_cost);
    if (m + 1 == completion.size())
    {
      return make_chance(a + ".c@" + c.str(), c, {{Rat(1), done}});
    }
    Rat const hazard = p / remaining;
    return make_chance(a + ".c@" + c.str(), c,
                       {{hazard, done}, {Rat(1) - hazard, ladder1(m + 1, remaining - p)}});
  };

  // Second agent: at each start time, start now or wait for the next one.
  std::function<NodePtr(std::size_t)> ladder2 = [&](std::size_t k) -> NodePtr {
    StartOption const &o = spec.starts[k];
    std::vector<std::pair<Rat, NodePtr>> branches;
    for (auto const &[d, p] : o.durations)
    {
      ResultLabel r;
      r.atoms.emplace("S2", o.start);
      r.atoms.emplace("C2", o.start + d);
      branches.emplace_back(p, make_leaf(b + ".end@" + o.start.str() + "+" + d.str(), r, o.cost));
    }
    NodePtr run = make_chance(b + ".run@" + o.start.str(), o.start + spec.chance_offset, std::move(branches));
    std::vector<NodePtr> kids{run};
    if (k + 1 < spec.starts.size())
    {
      kids.push_back(ladder2(k + 1));
    }
    return make_decision(b + ".start?@" + o.start.str(), o.start, std::move(kids));
  };

  Scenario s;
  s.name        = "sched";
  s.description = "Two sequential tasks; the second may start only after the first completes.";
  s.principal   = {kDefaultPrincipalId, make_leaf("C.idle", ResultLabel{}, Rat(0)),
                   UtilityExpr::parse("if present(" + a + ") and present(" + b + ") then (if r[" + b +
                                      "].S2 >= r[" + a + "].C1 then " +
                                      detail::table_expr("r[" + b + "].C2", spec.u_prime) +
                                      " else -inf) else 0")};
  s.agents.push_back({a, ladder1(0, Rat(1)), UtilityExpr()});
  s.agents.push_back({b, ladder2(0), UtilityExpr()});
  return s;
}

/// g2(s) = max over start options at or after s of E u'(C2) - cost - profit.
inline ExtReal simplified_g2(SequentialSpec const &spec, Rat const &s, Rat const &profit)
{
  ExtReal best = ExtReal::neg_inf();
  for (auto const &o : spec.starts)
  {
    if (o.start < s)
    {
      continue;
    }
    Rat e;
    for (auto const &[d, p] : o.durations)
    {
      e = e + p * spec.u_prime.at(o.start + d);
    }
    best = max(best, ExtReal(e - o.cost - profit));
  }
  return best;
}

/// g1(h) = E h(C1) - cost - profit, for a first agent without decisions.
inline ExtReal simplified_g1(SequentialSpec const &spec, std::function<ExtReal(Rat const &)> const &h,
                             Rat const &profit)
{
  ExtReal e;
  for (auto const &[c, p] : spec.completion)
  {
    e += ExtReal(p) * h(c);
  }
  return e - ExtReal(spec.first_cost + profit);
}

inline SequentialSpec sched_demo_spec()
{
  SequentialSpec spec;
  spec.completion = {{Rat(2), Rat(1, 2)}, {Rat(3), Rat(1, 2)}};
  spec.first_cost = Rat(3);
  Distribution const dur{{Rat(1), Rat(1, 2)}, {Rat(2), Rat(1, 2)}};
  spec.starts  = {{Rat(5, 2), dur, Rat(4)}, {Rat(7, 2), dur, Rat(3)}, {Rat(9, 2), dur, Rat(3)}};
  spec.u_prime = {{Rat(7, 2), Rat(40)},  {Rat(9, 2), Rat(30)},  {Rat(11, 2), Rat(20)},
                  {Rat(13, 2), Rat(10)}};
  return spec;
}

}  // namespace stochmech
