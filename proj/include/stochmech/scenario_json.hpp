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

#include "json.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <string>

namespace stochmech {

using Json = nlohmann::ordered_json;

namespace detail {

inline Rat json_rat(Json const &j, std::string const &where)
{
  if (j.is_number_integer())
  {
    return Rat(j.get<std::int64_t>());
  }
  if (j.is_string())
  {
    try
    {
      return Rat::parse(j.get<std::string>());
    }
    catch (std::exception const &e)
    {
      throw ScenarioError(where + ": " + e.what());
    }
  }
  throw ScenarioError(where + ": expected a rational as \"p/q\" string or integer");
}

inline Json const &field(Json const &j, char const *name, std::string const &where)
{
  if (!j.is_object() || !j.contains(name))
  {
    throw ScenarioError(where + ": missing field '" + name + "'");
  }
  return j.at(name);
}

inline bool looks_rational(std::string const &s)
{
  static std::regex const re(R"(^-?[0-9]+(/[0-9]+)?$)");
  return std::regex_match(s, re);
}

inline Atom json_atom(Json const &j, std::string const &where)
{
  if (j.is_number_integer())
  {
    return Rat(j.get<std::int64_t>());
  }
  if (j.is_string())
  {
    std::string const s = j.get<std::string>();
    if (looks_rational(s))
    {
      return Rat::parse(s);
    }
    return s;
  }
  throw ScenarioError(where + ": result atoms must be strings or rationals");
}

inline Json atom_json(Atom const &a)
{
  if (auto const *s = std::get_if<std::string>(&a))
  {
    return *s;
  }
  Rat const &r = std::get<Rat>(a);
  if (r.is_integer())
  {
    return r.num();
  }
  return r.str();
}

inline NodePtr json_node(Json const &j, std::string const &where)
{
  std::string const id   = field(j, "id", where).get<std::string>();
  std::string const here = where + "/" + id;
  std::string const kind = field(j, "kind", here).get<std::string>();

  TreeNode n;
  n.id = id;
  if (kind == "leaf")
  {
    n.kind = NodeKind::Leaf;
    if (j.contains("time"))
    {
      n.time = json_rat(j.at("time"), here + ".time");
    }
    else
    {
      n.timed = false;
    }
    if (j.contains("result"))
    {
      Json const &res = j.at("result");
      if (!res.is_object())
      {
        throw ScenarioError(here + ".result: expected an object");
      }
      for (auto const &[k, v] : res.items())
      {
        n.result.atoms.emplace(k, json_atom(v, here + ".result." + k));
      }
    }
    n.cost = j.contains("cost") ? json_rat(j.at("cost"), here + ".cost") : Rat(0);
    return std::make_shared<TreeNode const>(std::move(n));
  }

  n.time = json_rat(field(j, "time", here), here + ".time");
  Json const &kids = field(j, "children", here);
  if (!kids.is_array())
  {
    throw ScenarioError(here + ".children: expected an array");
  }
  if (kind == "decision")
  {
    n.kind = NodeKind::Decision;
    for (auto const &c : kids)
    {
      n.children.push_back(json_node(c, here));
    }
  }
  else if (kind == "chance")
  {
    n.kind = NodeKind::Chance;
    for (auto const &c : kids)
    {
      n.probabilities.push_back(json_rat(field(c, "prob", here), here + ".prob"));
      n.children.push_back(json_node(field(c, "node", here), here));
    }
  }
  else
  {
    throw ScenarioError(here + ": unknown node kind '" + kind + "'");
  }
  return std::make_shared<TreeNode const>(std::move(n));
}

inline UtilityExpr json_utility(Json const &j, std::string const &where, char const *fallback)
{
  if (!j.is_object() || !j.contains("utility"))
  {
    return UtilityExpr::parse(fallback);
  }
  try
  {
    return UtilityExpr::parse(j.at("utility").get<std::string>());
  }
  catch (ExprSyntaxError const &e)
  {
    throw ScenarioError(where + ".utility: " + e.what());
  }
}

}  // namespace detail

inline Json tree_to_json(TreeNode const &n)
{
  Json j;
  j["id"] = n.id;
  if (n.timed)
  {
    j["time"] = n.time.str();
  }
  j["kind"] = kind_name(n.kind);
  if (n.is_leaf())
  {
    Json res = Json::object();
    for (auto const &[k, v] : n.result.atoms)
    {
      res[k] = detail::atom_json(v);
    }
    j["result"] = res;
    j["cost"]   = n.cost.str();
    return j;
  }
  Json kids = Json::array();
  for (std::size_t k = 0; k < n.children.size(); ++k)
  {
    if (n.kind == NodeKind::Chance)
    {
      Json b;
      b["prob"] = n.probabilities[k].str();
      b["node"] = tree_to_json(*n.children[k]);
      kids.push_back(b);
    }
    else
    {
      kids.push_back(tree_to_json(*n.children[k]));
    }
  }
  j["children"] = kids;
  return j;
}

inline NodePtr tree_from_json(Json const &j, std::string const &where = "tree")
{
  return detail::json_node(j, where);
}

inline Json player_to_json(PlayerType const &p, bool with_id)
{
  Json j;
  if (with_id)
  {
    j["id"] = p.player;
  }
  j["tree"]    = tree_to_json(*p.tree);
  j["utility"] = p.utility.str();
  return j;
}

inline Json scenario_to_json(Scenario const &s)
{
  Json j;
  j["name"]        = s.name;
  j["description"] = s.description;
  Json principal   = player_to_json(s.principal, false);
  if (s.principal.player != kDefaultPrincipalId)
  {
    principal["id"] = s.principal.player;
  }
  j["principal"] = principal;
  Json agents    = Json::array();
  for (auto const &a : s.agents)
  {
    agents.push_back(player_to_json(a, true));
  }
  j["agents"] = agents;
  return j;
}

inline std::string serialize_scenario(Scenario const &s)
{
  return scenario_to_json(s).dump(2) + "\n";
}

/// Builds a scenario from parsed JSON without validating it.
inline Scenario scenario_from_json(Json const &j)
{
  using detail::field;
  if (!j.is_object())
  {
    throw ScenarioError("scenario: expected a JSON object");
  }
  Scenario s;
  s.name        = j.value("name", "");
  s.description = j.value("description", "");

  Json const &pj     = field(j, "principal", "scenario");
  s.principal.player = pj.value("id", kDefaultPrincipalId);
  s.principal.tree   = detail::json_node(field(pj, "tree", "principal"), "principal");
  s.principal.utility = detail::json_utility(pj, "principal", "0");

  if (j.contains("agents"))
  {
    for (auto const &aj : j.at("agents"))
    {
      PlayerType a;
      Json const &idj = field(aj, "id", "agents[]");
      a.player        = idj.is_string() ? idj.get<std::string>() : idj.dump();
      a.tree          = detail::json_node(field(aj, "tree", "agent " + a.player), "agent " + a.player);
      a.utility       = detail::json_utility(aj, "agent " + a.player, "-own.cost");
      s.agents.push_back(std::move(a));
    }
  }
  return s;
}

/// Parses and validates scenario text. Syntax errors carry line/column;
/// invariant violations are listed one per line.
inline Scenario parse_scenario(std::string const &text)
{
  Json j;
  try
  {
    j = Json::parse(text);
  }
  catch (Json::parse_error const &e)
  {
    std::size_t line = 1;
    std::size_t col  = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k)
    {
      if (text[k] == '\n')
      {
        ++line;
        col = 1;
      }
      else
      {
        ++col;
      }
    }
    throw ScenarioError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                        ": " + e.what());
  }
  Scenario   s          = scenario_from_json(j);
  auto const violations = validate_scenario(s);
  if (!violations.empty())
  {
    std::string msg = "invalid scenario";
    for (auto const &v : violations)
    {
      msg += "\n  " + v;
    }
    throw ScenarioError(msg);
  }
  return s;
}

inline Scenario load_scenario(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ScenarioError("cannot read '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

inline bool scenario_equal(Scenario const &a, Scenario const &b)
{
  auto same = [](PlayerType const &x, PlayerType const &y) {
    return x.player == y.player && x.utility == y.utility && tree_equal(*x.tree, *y.tree);
  };
  if (a.name != b.name || a.description != b.description || !same(a.principal, b.principal) ||
      a.agents.size() != b.agents.size())
  {
    return false;
  }
  for (std::size_t k = 0; k < a.agents.size(); ++k)
  {
    if (!same(a.agents[k], b.agents[k]))
    {
      return false;
    }
  }
  return true;
}

}  // namespace stochmech
