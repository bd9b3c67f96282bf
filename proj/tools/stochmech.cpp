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

#include "CLI11.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace stochmech;

namespace {

struct Options
{
  std::string                  verb;
  std::string                  target;
  std::string                  strategies;
  std::string                  deviations;
  std::string                  agent;
  std::string                  mechanism = "first";
  std::string                  format    = "json";
  std::string                  out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t>   runs;
};

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void emit(Options const &o, Json const &j, std::string const &table)
{
  std::string const text = o.format == "table" ? table : j.dump(2) + "\n";
  if (o.out.empty())
  {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f)
  {
    throw UsageError("cannot write '" + o.out + "'");
  }
  f << text;
}

std::map<PlayerId, Strategy> load_strategies(Options const &o, Scenario const &s)
{
  if (o.strategies.empty())
  {
    throw UsageError(o.verb + " requires --strategies");
  }
  return strategies_from_json(read_json_file(o.strategies), s);
}

std::uint64_t need_seed(Options const &o)
{
  if (!o.seed)
  {
    throw UsageError(o.verb + " requires --seed");
  }
  return *o.seed;
}

void validate(Options const &o)
{
  Scenario const s = load_scenario(o.target);
  Json           j;
  j["scenario"] = s.name;
  j["valid"]    = true;
  j["agents"]   = s.agent_ids();
  std::string table = "scenario " + s.name + " is valid, " + std::to_string(s.agents.size()) + " agents\n";
  emit(o, j, table);
}

void value(Options const &o)
{
  Scenario const  s   = load_scenario(o.target);
  Selection const sel = select_accepted(s);
  Json            j   = selection_json(sel);
  j["scenario"]       = s.name;
  emit(o, j, selection_table(sel));
}

void run(Options const &o)
{
  Scenario const s     = load_scenario(o.target);
  auto const     strat = load_strategies(o, s);
  Trace const    t     = run_mechanism(s, strat, parse_mechanism(o.mechanism), need_seed(o));
  emit(o, trace_to_json(t), trace_table(t));
}

void expect(Options const &o)
{
  Scenario const    s     = load_scenario(o.target);
  auto const        strat = load_strategies(o, s);
  Mechanism const   m     = parse_mechanism(o.mechanism);
  ExpectationReport r;
  if (o.runs)
  {
    r = monte_carlo(s, strat, m, *o.runs, need_seed(o));
  }
  else
  {
    r = exact_expectations(s, strat, m);
  }
  emit(o, expectation_json(r), expectation_table(r));
}

void check_eq(Options const &o)
{
  Scenario const s = load_scenario(o.target);
  if (o.agent.empty())
  {
    throw UsageError("check-eq requires --agent");
  }
  DeviationFamily const family =
      o.deviations.empty() ? DeviationFamily{} : deviation_family_from_json(read_json_file(o.deviations));
  std::optional<std::map<PlayerId, Strategy>> others;
  if (!o.strategies.empty())
  {
    others = load_strategies(o, s);
  }
  EquilibriumReport const r = check_equilibrium(s, parse_mechanism(o.mechanism), o.agent, family, others);
  emit(o, equilibrium_json(r), equilibrium_table(r));
}

void demo(Options const &o)
{
  std::vector<Demo> const demos = bundled_demos();
  Demo const &            d     = find_demo(demos, o.target);
  Trace const t = run_mechanism(d.scenario, d.strategies, parse_mechanism(o.mechanism), o.seed.value_or(0));
  Json        j = trace_to_json(t);
  j["provenance"] = d.provenance;
  emit(o, j, d.provenance + "\n\n" + trace_table(t));
}

int dispatch(Options const &o)
{
  try
  {
    if (o.verb == "validate")
    {
      validate(o);
    }
    else if (o.verb == "value")
    {
      value(o);
    }
    else if (o.verb == "run")
    {
      run(o);
    }
    else if (o.verb == "expect")
    {
      expect(o);
    }
    else if (o.verb == "check-eq")
    {
      check_eq(o);
    }
    else
    {
      demo(o);
    }
    return 0;
  }
  catch (InvariantBreach const &e)
  {
    std::cerr << "invariant breach: " << e.what() << "\n";
    return 2;
  }
  catch (std::invalid_argument const &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  catch (std::domain_error const &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  catch (std::out_of_range const &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  catch (std::logic_error const &e)
  {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char **argv)
{
  Options  o;
  CLI::App app{"Exact stochastic mechanism design engine", "stochmech"};
  app.require_subcommand(1);

  auto common = [&](CLI::App *sub, char const *what) {
    sub->add_option(what[0] == 'n' ? "name" : "scenario", o.target, what)->required();
    sub->add_option("--out", o.out, "Write output to this file");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "table"}));
  };
  auto mech = [&](CLI::App *sub) {
    sub->add_option("--mechanism", o.mechanism, "Payment rule")
        ->check(CLI::IsMember({"first", "second", "first-reliance"}));
  };

  auto *validate = app.add_subcommand("validate", "Check a scenario file");
  common(validate, "scenario JSON file");
  auto *value = app.add_subcommand("value", "Value of the game and the accepted set");
  common(value, "scenario JSON file");
  auto *run = app.add_subcommand("run", "Run the mechanism once and print the trace");
  common(run, "scenario JSON file");
  mech(run);
  run->add_option("--strategies", o.strategies, "Strategy file");
  run->add_option("--seed", o.seed, "Random seed");
  auto *expect = app.add_subcommand("expect", "Expected payoffs, exact or sampled");
  common(expect, "scenario JSON file");
  mech(expect);
  expect->add_option("--strategies", o.strategies, "Strategy file");
  expect->add_option("--seed", o.seed, "Random seed for sampling");
  expect->add_option("--runs", o.runs, "Sample this many runs instead of exact enumeration")
      ->check(CLI::PositiveNumber);
  auto *check = app.add_subcommand("check-eq", "Search a deviation family for a profitable deviation");
  common(check, "scenario JSON file");
  mech(check);
  check->add_option("--agent", o.agent, "Deviating agent");
  check->add_option("--deviations", o.deviations, "Deviation family file");
  check->add_option("--strategies", o.strategies, "Strategies of the other agents");
  auto *demo = app.add_subcommand("demo", "Run a bundled demonstration");
  common(demo, "name of the demo");
  mech(demo);
  demo->add_option("--seed", o.seed, "Random seed");

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::ParseError const &e)
  {
    int const code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  o.verb = app.get_subcommands().front()->get_name();
  return dispatch(o);
}
