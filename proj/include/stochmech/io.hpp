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

#include "stochmech/analysis.hpp"
#include "stochmech/scenario_json.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace stochmech {

/// {"exact": "p/q"} plus "decimal" when the expansion terminates.
inline Json number_json(ExtReal const &x)
{
  Json j;
  j["exact"] = x.str();
  if (x.finite())
  {
    if (auto d = x.value().decimal())
    {
      j["decimal"] = *d;
    }
  }
  return j;
}

inline Json number_json(Rat const &x) { return number_json(ExtReal(x)); }

inline std::string number_text(ExtReal const &x)
{
  if (x.finite())
  {
    if (auto d = x.value().decimal())
    {
      return *d == x.str() ? *d : x.str() + " (" + *d + ")";
    }
  }
  return x.str();
}

inline Json result_json(ResultLabel const &r)
{
  Json j = Json::object();
  for (auto const &[k, v] : r.atoms)
  {
    j[k] = detail::atom_json(v);
  }
  return j;
}

inline Json application_json(Application const &a)
{
  Json j;
  j["player"]     = a.player;
  j["provenance"] = a.provenance.str();
  j["tree"]       = tree_to_json(*a.tree);
  j["utility"]    = a.utility.str();
  return j;
}

inline Json path_json(std::vector<PathEvent> const &path)
{
  Json out = Json::array();
  for (auto const &e : path)
  {
    Json j;
    j["time"]  = e.time.str();
    j["owner"] = e.owner;
    j["node"]  = e.node;
    j["kind"]  = e.chance ? "chance" : "decision";
    j["index"] = e.index;
    if (e.chance)
    {
      j["probability"] = e.probability.str();
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline Json message_json(Message const &m)
{
  Json j;
  j["time"] = m.time.str();
  j["kind"] = message_kind_name(m.kind);
  j["from"] = m.from;
  j["to"]   = m.to;
  switch (m.kind)
  {
  case Message::Kind::Application:
    j["application"] = application_json(*m.application);
    break;
  case Message::Kind::ChanceReport:
  case Message::Kind::DecisionRequest:
    j["node"]  = m.node;
    j["index"] = m.index;
    break;
  case Message::Kind::DeltaAnnouncement:
  {
    j["node"]   = m.node;
    Json deltas = Json::array();
    for (auto const &d : m.deltas)
    {
      deltas.push_back(d.str());
    }
    j["deltas"] = std::move(deltas);
    break;
  }
  case Message::Kind::ResultDelivery:
  {
    Json r = Json::object();
    for (auto const &[y, res] : m.results)
    {
      r[y] = result_json(res);
    }
    j["results"] = std::move(r);
    break;
  }
  case Message::Kind::Modification:
    j["node"]    = m.node;
    j["subtree"] = tree_to_json(*m.application->tree);
    j["amount"]  = number_json(m.amount);
    break;
  }
  return j;
}

inline Json valuation_json(ApplicationValuation const &v)
{
  Json j;
  j["v_all"]        = number_json(v.v_all);
  j["v_minus_i"]    = number_json(v.v_minus_i);
  j["surplus"]      = number_json(v.surplus);
  j["signed_value"] = number_json(v.signed_value);
  j["accepted"]     = v.accepted;
  return j;
}

inline Json trace_to_json(Trace const &t)
{
  Json j;
  j["scenario"]   = t.scenario;
  j["mechanism"]  = mechanism_name(t.mechanism);
  j["strategies"] = t.strategy_labels;
  j["accepted"]   = t.accepted;
  j["value_app"]  = number_json(t.value_app);
  Json vals       = Json::object();
  for (auto const &[id, v] : t.valuations)
  {
    vals[id] = valuation_json(v);
  }
  j["valuations"] = std::move(vals);
  Json msgs       = Json::array();
  for (auto const &m : t.messages)
  {
    msgs.push_back(message_json(m));
  }
  j["messages"]      = std::move(msgs);
  j["presumed_path"] = path_json(t.presumed_path);
  j["real_path"]     = path_json(t.real_path);
  Json presumed = Json::object(), real = Json::object();
  for (auto const &[y, r] : t.presumed_results)
  {
    presumed[y] = result_json(r);
  }
  for (auto const &[y, r] : t.real_results)
  {
    real[y] = result_json(r);
  }
  j["results"] = {{"presumed", presumed}, {"real", real}};
  Json pays    = Json::object();
  for (auto const &[i, p] : t.payments)
  {
    Json pj;
    pj["base"]         = number_json(p.base);
    pj["delta_sum"]    = number_json(p.delta_sum);
    pj["bonus"]        = number_json(p.bonus);
    pj["modification"] = number_json(p.modification);
    pj["mismatch"]     = p.mismatch;
    pj["total"]        = number_json(p.total());
    pays[i]            = std::move(pj);
  }
  j["payments"] = std::move(pays);
  Json payoffs  = Json::object();
  for (auto const &[y, p] : t.payoffs)
  {
    payoffs[y] = number_json(p);
  }
  j["payoffs"]          = std::move(payoffs);
  j["principal_payoff"] = number_json(t.principal_payoff);
  j["system_payoff"]    = number_json(t.system_payoff);
  j["probability"]      = t.probability.str();
  j["violations"]       = t.violations;
  return j;
}

inline std::string trace_table(Trace const &t)
{
  std::ostringstream os;
  os << "scenario " << t.scenario << "  mechanism " << mechanism_name(t.mechanism) << "\n";
  os << "v(app) = " << number_text(t.value_app) << "  accepted {";
  std::string sep;
  for (auto const &a : t.accepted)
  {
    os << sep << a;
    sep = ", ";
  }
  os << "}\n\npresumed path\n";
  for (auto const &e : t.presumed_path)
  {
    os << "  t=" << std::setw(6) << e.time.str() << "  " << std::setw(4) << e.owner << "  " << e.node << " "
       << (e.chance ? "chance" : "decision") << " -> " << e.index << "\n";
  }
  os << "\n" << std::left << std::setw(10) << "player" << std::setw(22) << "payment" << "payoff\n";
  for (auto const &[y, p] : t.payoffs)
  {
    auto it = t.payments.find(y);
    os << std::setw(10) << y << std::setw(22) << (it == t.payments.end() ? "-" : number_text(it->second.total()))
       << number_text(p) << "\n";
  }
  os << "system payoff " << number_text(t.system_payoff) << "\n";
  for (auto const &v : t.violations)
  {
    os << "violation: " << v << "\n";
  }
  return os.str();
}

inline Json selection_json(Selection const &sel)
{
  Json j;
  j["value"]    = number_json(sel.value);
  j["accepted"] = sel.accepted_ids;
  Json subsets  = Json::array();
  for (AgentMask m = 0; m < sel.subset_values.size(); ++m)
  {
    Json row;
    row["agents"] = sel.game->ids_of(m);
    row["value"]  = number_json(sel.subset_values[m]);
    subsets.push_back(std::move(row));
  }
  j["subsets"] = std::move(subsets);
  Json vals    = Json::object();
  for (auto const &[id, v] : sel.valuations)
  {
    vals[id] = valuation_json(v);
  }
  j["valuations"] = std::move(vals);
  return j;
}

inline std::string selection_table(Selection const &sel)
{
  std::ostringstream os;
  os << "v = " << number_text(sel.value) << "  accepted {";
  std::string sep;
  for (auto const &a : sel.accepted_ids)
  {
    os << sep << a;
    sep = ", ";
  }
  os << "}\n" << std::left << std::setw(8) << "agent" << std::setw(24) << "v+" << std::setw(24) << "v±"
     << "accepted\n";
  for (auto const &[id, v] : sel.valuations)
  {
    os << std::setw(8) << id << std::setw(24) << number_text(v.surplus) << std::setw(24)
       << number_text(v.signed_value) << (v.accepted ? "yes" : "no") << "\n";
  }
  return os.str();
}

inline Json expectation_json(ExpectationReport const &r)
{
  Json j;
  j["scenario"]  = r.scenario;
  j["mechanism"] = mechanism_name(r.mechanism);
  j["method"]    = r.exact ? "exact" : "monte-carlo";
  j[r.exact ? "paths" : "runs"] = r.paths;
  j["accepted"]  = r.accepted;
  Json pay       = Json::object();
  for (auto const &[y, p] : r.expected_payoff)
  {
    pay[y] = number_json(p);
  }
  j["expected_payoff"] = std::move(pay);
  Json ds              = Json::object();
  for (auto const &[y, p] : r.expected_delta_sum)
  {
    ds[y] = number_json(p);
  }
  j["expected_delta_sum"] = std::move(ds);
  if (!r.exact)
  {
    Json sd = Json::object();
    for (auto const &[y, s] : r.payoff_stddev)
    {
      sd[y] = s;
    }
    j["payoff_stddev"] = std::move(sd);
  }
  j["system_payoff"]       = number_json(r.system);
  j["v_game"]              = number_json(r.v_game);
  j["v_app"]               = number_json(r.v_app);
  j["gap"]                 = number_json(r.gap);
  j["principal_invariant"] = r.principal_invariant;
  return j;
}

inline std::string expectation_table(ExpectationReport const &r)
{
  std::ostringstream os;
  os << (r.exact ? "exact expectation over " : "monte carlo over ") << r.paths << (r.exact ? " paths" : " runs")
     << "  mechanism " << mechanism_name(r.mechanism) << "\n";
  os << std::left << std::setw(10) << "player" << "E payoff\n";
  for (auto const &[y, p] : r.expected_payoff)
  {
    os << std::setw(10) << y << number_text(p) << "\n";
  }
  os << "E p(Pl) = " << number_text(r.system) << "  v(G) = " << number_text(r.v_game)
     << "  v(app) = " << number_text(r.v_app) << "\n";
  os << "principal payoff constant across outcomes: " << (r.principal_invariant ? "yes" : "no") << "\n";
  return os.str();
}

inline Json equilibrium_json(EquilibriumReport const &r)
{
  Json j;
  j["scenario"]              = r.scenario;
  j["agent"]                 = r.agent;
  j["mechanism"]             = mechanism_name(r.mechanism);
  j["scope"]                 = r.scope();
  j["verdict"]               = r.verdict();
  j["equilibrium_payoff"]    = number_json(r.equilibrium_payoff);
  j["best_deviation"]        = r.best_deviation;
  j["best_deviation_payoff"] = number_json(r.best_deviation_payoff);
  j["cap"]                   = number_json(r.cap);
  j["cap_respected"]         = r.cap_respected;
  j["cap_tight"]             = r.cap_tight;
  j["system_bounded"]        = r.system_bounded;
  if (r.signed_value_bound)
  {
    j["signed_value_bound"] = *r.signed_value_bound;
  }
  Json devs = Json::array();
  for (auto const &o : r.outcomes)
  {
    Json d;
    d["label"]    = o.label;
    d["accepted"] = o.accepted;
    d["payoff"]   = number_json(o.payoff);
    if (o.signed_value)
    {
      d["signed_value"] = number_json(*o.signed_value);
    }
    devs.push_back(std::move(d));
  }
  j["deviations"] = std::move(devs);
  return j;
}

inline std::string equilibrium_table(EquilibriumReport const &r)
{
  std::ostringstream os;
  os << "agent " << r.agent << "  mechanism " << mechanism_name(r.mechanism) << "  " << r.scope() << "\n";
  os << "verdict: " << r.verdict() << "\n";
  os << "cost-price payoff " << number_text(r.equilibrium_payoff) << ", best deviation " << r.best_deviation
     << " with " << number_text(r.best_deviation_payoff) << "\n";
  os << "cap v(G) - v(-j) = " << number_text(r.cap) << (r.cap_respected ? " respected" : " VIOLATED")
     << (r.cap_tight ? ", tight at cost price" : "") << "\n";
  if (r.signed_value_bound)
  {
    os << "signed value bound: " << (*r.signed_value_bound ? "holds" : "FAILS") << "\n";
  }
  return os.str();
}

inline Json coalition_json(CoalitionReport const &r)
{
  Json j;
  j["agents"]           = {r.a, r.b};
  j["baseline_second"]  = number_json(r.baseline_second);
  j["baseline_first"]   = number_json(r.baseline_first);
  j["separate_value"]   = number_json(r.separate_value);
  j["consortium_value"] = number_json(r.consortium_value);
  Json rows             = Json::array();
  for (auto const &row : r.rows)
  {
    Json x;
    x["x"]                = row.x.str();
    x["second_pair"]      = number_json(row.second_pair);
    x["second_gain"]      = number_json(row.second_gain);
    x["first_pair"]       = number_json(row.first_pair);
    x["consortium_first"] = number_json(row.consortium_first);
    rows.push_back(std::move(x));
  }
  j["rows"] = std::move(rows);
  return j;
}

/// Strategy file entry: {"kind": cost_price | fair | fair_like | opt_out |
/// custom | tilt, ...}.
inline Strategy strategy_from_json(Json const &j, PlayerType const &truth, std::string const &where)
{
  std::string const kind = detail::field(j, "kind", where).get<std::string>();
  if (kind == "cost_price")
  {
    return cost_price(truth);
  }
  if (kind == "fair")
  {
    return fair(truth, detail::json_rat(detail::field(j, "profit", where), where + "/profit"));
  }
  if (kind == "fair_like")
  {
    return fair_like(truth, detail::json_utility(j, where, "-own.cost"));
  }
  if (kind == "opt_out")
  {
    return opt_out(truth);
  }
  if (kind == "tilt")
  {
    Strategy const base = strategy_from_json(detail::field(j, "base", where), truth, where + "/base");
    return betting_tilt(base, detail::field(j, "other", where).get<std::string>(),
                        detail::field(j, "attr", where).get<std::string>(),
                        detail::json_atom(detail::field(j, "favoured", where), where),
                        detail::json_rat(detail::field(j, "probability", where), where + "/probability"),
                        detail::json_rat(detail::field(j, "stake", where), where + "/stake"));
  }
  if (kind != "custom")
  {
    throw ScenarioError(where + ": unknown strategy kind '" + kind + "'");
  }
  Strategy s = cost_price(truth);
  s.label    = j.value("label", std::string("custom"));
  if (j.contains("application"))
  {
    Json const &a = j.at("application");
    s.application = Application::arbitrary(truth.player, tree_from_json(detail::field(a, "tree", where), where),
                                           detail::json_utility(a, where, "-own.cost"));
  }
  if (j.contains("profit"))
  {
    s.application = shift_application(s.application, -detail::json_rat(j.at("profit"), where + "/profit"));
  }
  if (j.contains("lies"))
  {
    for (auto const &[node, table] : j.at("lies").items())
    {
      for (auto const &[when, report] : table.items())
      {
        int const key = when == "*" ? -1 : std::stoi(when);
        s.lies[node][key] = report.get<std::size_t>();
      }
    }
  }
  if (j.contains("disobey"))
  {
    for (auto const &[node, child] : j.at("disobey").items())
    {
      s.disobey[node] = child.get<std::size_t>();
    }
  }
  if (j.contains("modifications"))
  {
    for (auto const &m : j.at("modifications"))
    {
      s.modifications.push_back({detail::field(m, "at", where).get<std::string>(),
                                 tree_from_json(detail::field(m, "subtree", where), where + "/subtree")});
    }
  }
  return s;
}

/// {"strategies": {id: entry}}; agents without an entry play cost price.
inline std::map<PlayerId, Strategy> strategies_from_json(Json const &j, Scenario const &s)
{
  Json const &table = detail::field(j, "strategies", "strategy file");
  std::map<PlayerId, Strategy> out;
  for (auto const &[id, entry] : table.items())
  {
    PlayerType const *truth = s.agent(id);
    if (truth == nullptr)
    {
      throw ScenarioError("strategy file: unknown agent '" + id + "'");
    }
    out.emplace(id, strategy_from_json(entry, *truth, "strategies/" + id));
  }
  for (auto const &a : s.agents)
  {
    if (out.count(a.player) == 0)
    {
      out.emplace(a.player, cost_price(a));
    }
  }
  return out;
}

inline DeviationFamily deviation_family_from_json(Json const &j)
{
  DeviationFamily f;
  auto            rats = [&](char const *key, std::vector<Rat> &out) {
    if (j.contains(key))
    {
      out.clear();
      for (auto const &x : j.at(key))
      {
        out.push_back(detail::json_rat(x, std::string("deviations/") + key));
      }
    }
  };
  rats("shifts", f.shifts);
  rats("contingent_shifts", f.contingent_shifts);
  f.lies         = j.value("lies", f.lies);
  f.disobedience = j.value("disobedience", f.disobedience);
  f.opt_out      = j.value("opt_out", f.opt_out);
  f.false_trees  = j.value("false_trees", f.false_trees);
  f.combinations = j.value("combinations", f.combinations);
  if (j.contains("pool"))
  {
    for (auto const &a : j.at("pool"))
    {
      f.pool.push_back(Application::arbitrary(
          "", tree_from_json(detail::field(a, "tree", "deviations/pool"), "deviations/pool"),
          detail::json_utility(a, "deviations/pool", "-own.cost")));
    }
  }
  return f;
}

inline Json read_json_file(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ScenarioError("cannot read '" + path + "'");
  }
  try
  {
    return Json::parse(in);
  }
  catch (Json::parse_error const &e)
  {
    throw ScenarioError(path + ": " + e.what());
  }
}

}  // namespace stochmech
