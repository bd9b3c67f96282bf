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

#include "stochmech/strategy.hpp"
#include "stochmech/value.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochmech {

enum class Mechanism
{
  FirstPrice,
  SecondPrice,
  FirstPriceReliance
};

inline char const *mechanism_name(Mechanism m)
{
  switch (m)
  {
  case Mechanism::FirstPrice:
    return "first";
  case Mechanism::SecondPrice:
    return "second";
  default:
    return "first-reliance";
  }
}

inline Mechanism parse_mechanism(std::string const &s)
{
  if (s == "first")
  {
    return Mechanism::FirstPrice;
  }
  if (s == "second")
  {
    return Mechanism::SecondPrice;
  }
  if (s == "first-reliance")
  {
    return Mechanism::FirstPriceReliance;
  }
  throw std::invalid_argument("unknown mechanism '" + s + "' (expected first, second or first-reliance)");
}

struct Message
{
  enum class Kind
  {
    Application,
    ChanceReport,
    DecisionRequest,
    DeltaAnnouncement,
    ResultDelivery,
    Modification
  };
  Kind        kind = Kind::Application;
  Rat         time;
  PlayerId    from;
  PlayerId    to;
  std::string node;
  std::size_t index = 0;
  std::vector<Rat>                deltas;       // DeltaAnnouncement, by branch
  std::map<PlayerId, ResultLabel> results;      // ResultDelivery
  std::optional<Application>      application;  // Application; Modification carries the subtree
  Rat                             amount;       // Modification: value difference charged
};

inline char const *message_kind_name(Message::Kind k)
{
  switch (k)
  {
  case Message::Kind::Application:
    return "application";
  case Message::Kind::ChanceReport:
    return "chance-report";
  case Message::Kind::DecisionRequest:
    return "decision-request";
  case Message::Kind::DeltaAnnouncement:
    return "delta-announcement";
  case Message::Kind::ResultDelivery:
    return "result-delivery";
  default:
    return "modification";
  }
}

struct PathEvent
{
  Rat         time;
  PlayerId    owner;
  std::string node;
  bool        chance = false;
  std::size_t index  = 0;
  Rat         probability{1};
};

/// f_i = base + delta_sum + bonus + modification, or -inf on a mismatch.
struct PaymentBreakdown
{
  ExtReal base;  // -u*_i(l*_i, r)
  Rat     delta_sum;
  ExtReal bonus;
  Rat     modification;
  bool    mismatch = false;

  ExtReal total() const
  {
    if (mismatch)
    {
      return ExtReal::neg_inf();
    }
    return base + ExtReal(delta_sum) + bonus + ExtReal(modification);
  }
};

struct Trace
{
  std::string                              scenario;
  Mechanism                                mechanism = Mechanism::FirstPrice;
  std::map<PlayerId, std::string>          strategy_labels;
  std::vector<Application>                 applications;
  std::set<PlayerId>                       accepted;
  ExtReal                                  value_app;
  std::map<PlayerId, ApplicationValuation> valuations;
  std::vector<Message>                     messages;
  std::vector<PathEvent>                   presumed_path;
  std::vector<PathEvent>                   real_path;
  std::map<PlayerId, ResultLabel>          presumed_results;
  std::map<PlayerId, ResultLabel>          real_results;
  std::map<PlayerId, std::vector<Rat>>     deltas;  // d(ch) per agent, in order
  std::map<PlayerId, PaymentBreakdown>     payments;
  std::map<PlayerId, ExtReal>              utilities;  // u_y at the real endstate
  std::map<PlayerId, ExtReal>              payoffs;
  PlayerId                                 principal;
  ExtReal                                  principal_payoff;
  ExtReal                                  system_payoff;
  Rat                                      probability{1};
  std::vector<std::string>                 violations;

  ExtReal payment(PlayerId const &i) const
  {
    auto it = payments.find(i);
    if (it == payments.end())
    {
      throw std::invalid_argument("agent '" + i + "' is not accepted in this trace");
    }
    return it->second.total();
  }

  ExtReal payoff(PlayerId const &y) const
  {
    auto it = payoffs.find(y);
    if (it == payoffs.end())
    {
      throw std::invalid_argument("unknown player '" + y + "'");
    }
    return it->second;
  }
};

inline PaymentBreakdown payment(Trace const &t, PlayerId const &i)
{
  auto it = t.payments.find(i);
  if (it == t.payments.end())
  {
    throw std::invalid_argument("agent '" + i + "' is not accepted in this trace");
  }
  return it->second;
}

namespace detail {

/// v(after) - v(before) as a finite number; a degenerate -inf game yields 0.
inline Rat finite_delta(ExtReal const &after, ExtReal const &before)
{
  if (before.is_neg_inf())
  {
    return Rat(0);
  }
  ExtReal const d = after - before;
  if (!d.finite())
  {
    throw InvariantBreach("infinite chance delta from a finite state value");
  }
  return d.value();
}

}  // namespace detail

/// d(ch) for every branch of the presumed chance point at `st`.
inline std::vector<Rat> announce_deltas(ValueEngine const &engine, GameState const &st)
{
  auto const slot = st.next_slot();
  if (!slot || st.frontier()[*slot]->kind != NodeKind::Chance)
  {
    throw std::invalid_argument("announce_deltas needs a presumed chance state");
  }
  if (*slot == 0)
  {
    throw std::invalid_argument("announce_deltas is for agents' chance points");
  }
  ExtReal const    before = engine.value(st);
  std::vector<Rat> out;
  Rat              weighted;
  TreeNode const  *n = st.frontier()[*slot];
  for (std::size_t k = 0; k < n->arity(); ++k)
  {
    out.push_back(detail::finite_delta(engine.value(st.advance(k)), before));
    weighted = weighted + n->probabilities[k] * out.back();
  }
  if (!weighted.is_zero())
  {
    throw InvariantBreach("announced deltas at '" + n->id + "' have weighted sum " + weighted.str());
  }
  return out;
}

/// One run of a mechanism. Copyable: every real chance draw stops the run
/// at pending(), so callers can branch over outcomes or sample them.
class Execution
{
public:
  struct Pending
  {
    PlayerId         owner;
    std::string      node;
    std::vector<Rat> probabilities;
  };

  Execution(Scenario const &s, std::map<PlayerId, Strategy> const &strategies, Mechanism m)
  {
    auto setup       = std::make_shared<Setup>();
    setup->scenario  = s;
    setup->mechanism = m;
    std::vector<Application> apps;
    for (auto const &a : s.agents)
    {
      auto it = strategies.find(a.player);
      if (it == strategies.end())
      {
        throw std::invalid_argument("no strategy for agent '" + a.player + "'");
      }
      if (it->second.application.player != a.player)
      {
        throw std::invalid_argument("strategy for '" + a.player + "' applies as '" +
                                    it->second.application.player + "'");
      }
      setup->labels[a.player] = it->second.label;
      if (!it->second.participate)
      {
        continue;
      }
      apps.push_back(it->second.application);
      setup->strategies.push_back(it->second);
      setup->types.push_back(a);
    }
    setup->applications = apps;
    setup->selection    = select_accepted(s.principal, apps);
    setup_              = setup;

    game_     = setup_->selection.game;
    engine_   = setup_->selection.engine;
    presumed_ = std::make_unique<GameState>(setup_->selection.initial());

    std::size_t const slots = game_->size();
    app_roots_.resize(slots);
    real_roots_.resize(slots);
    real_.assign(slots, nullptr);
    real_history_.resize(slots);
    requests_.resize(slots);
    deltas_.resize(slots);
    modification_.assign(slots, Rat(0));
    violated_.assign(slots, false);
    applied_.resize(slots);
    for (std::size_t k = 1; k < slots; ++k)
    {
      app_roots_[k] = game_->slot(k).root;
      Message msg;
      msg.kind        = Message::Kind::Application;
      msg.from        = game_->slot(k).player;
      msg.to          = s.principal.player;
      msg.application = setup_->applications[k - 1];
      messages_.push_back(std::move(msg));
      if (presumed_->participates(k))
      {
        real_roots_[k] = setup_->types[k - 1].tree;
        real_[k]       = real_roots_[k].get();
      }
    }
    run();
  }

  Execution(Execution const &o) { *this = o; }
  Execution &operator=(Execution const &o)
  {
    if (this != &o)
    {
      setup_        = o.setup_;
      game_         = o.game_;
      engine_       = o.engine_;
      presumed_     = std::make_unique<GameState>(*o.presumed_);
      app_roots_    = o.app_roots_;
      real_roots_   = o.real_roots_;
      retired_      = o.retired_;
      real_         = o.real_;
      real_history_ = o.real_history_;
      requests_     = o.requests_;
      deltas_       = o.deltas_;
      modification_ = o.modification_;
      violated_     = o.violated_;
      applied_      = o.applied_;
      messages_     = o.messages_;
      presumed_path_ = o.presumed_path_;
      real_path_    = o.real_path_;
      violations_   = o.violations_;
      probability_  = o.probability_;
      pending_      = o.pending_;
      pending_slot_ = o.pending_slot_;
      pending_real_ = o.pending_real_;
    }
    return *this;
  }

  Selection const &selection() const { return setup_->selection; }
  GameState const &presumed_state() const { return *presumed_; }
  ValueEngine const &engine() const { return *engine_; }
  Rat const &probability() const { return probability_; }

  std::optional<Pending> const &pending() const { return pending_; }
  bool finished() const { return !pending_; }

  void resolve(std::size_t branch)
  {
    if (!pending_)
    {
      throw std::logic_error("resolve called with no pending chance event");
    }
    if (branch >= pending_->probabilities.size())
    {
      throw std::out_of_range("branch " + std::to_string(branch) + " out of range at '" + pending_->node + "'");
    }
    Rat const p = pending_->probabilities[branch];
    probability_ = probability_ * p;
    if (pending_real_)
    {
      TreeNode const *n = real_[pending_slot_];
      real_path_.push_back({n->time, pending_->owner, n->id, true, branch, p});
      real_history_[pending_slot_][n->id] = branch;
      real_[pending_slot_]                = n->children[branch].get();
    }
    else
    {
      TreeNode const *n = presumed_->frontier()[0];
      presumed_path_.push_back({n->time, pending_->owner, n->id, true, branch, p});
      real_path_.push_back(presumed_path_.back());
      *presumed_ = presumed_->advance(branch);
    }
    pending_.reset();
    run();
  }

  /// Replaces the subtree of j's application at j's current presumed node
  /// (and the matching part of the real tree). Returns v_new - v_old of the
  /// presumed state, which is credited to j like a chance delta.
  Rat apply_modification(PlayerId const &j, NodePtr subtree)
  {
    auto const slot = game_->slot_of(j);
    if (!slot || *slot == 0 || presumed_->frontier()[*slot] == nullptr)
    {
      throw std::invalid_argument("agent '" + j + "' is not accepted");
    }
    if (pending_ && pending_real_ && pending_slot_ == *slot)
    {
      throw std::logic_error("cannot modify while a chance event of '" + j + "' is being resolved");
    }
    Rat const diff = modify(*slot, {presumed_->frontier()[*slot]->id, std::move(subtree)});
    if (!pending_)
    {
      run();
    }
    return diff;
  }

  Trace finish() const
  {
    if (pending_)
    {
      throw std::logic_error("finish called with a pending chance event");
    }
    Setup const &su = *setup_;
    Trace        t;
    t.scenario        = su.scenario.name;
    t.mechanism       = su.mechanism;
    t.strategy_labels = su.labels;
    t.applications    = su.applications;
    t.accepted        = su.selection.accepted_ids;
    t.value_app       = su.selection.value;
    t.valuations      = su.selection.valuations;
    t.messages        = messages_;
    t.presumed_path   = presumed_path_;
    t.real_path       = real_path_;
    t.probability     = probability_;
    t.violations      = violations_;
    t.principal       = su.scenario.principal.player;

    Frontier const &pf = presumed_->frontier();
    Rat const       end_time = last_time();
    std::map<std::string, ResultLabel const *> real_results, presumed_results;
    real_results.emplace(t.principal, &pf[0]->result);
    for (std::size_t k = 0; k < pf.size(); ++k)
    {
      if (pf[k] == nullptr)
      {
        continue;
      }
      PlayerId const &y = game_->slot(k).player;
      presumed_results.emplace(y, &pf[k]->result);
      t.presumed_results.emplace(y, pf[k]->result);
      if (k > 0)
      {
        real_results.emplace(y, &real_[k]->result);
      }
      t.real_results.emplace(y, k == 0 ? pf[0]->result : real_[k]->result);
    }

    ExtReal const u_c = eval_utility(su.scenario.principal.utility, *pf[0], real_results);
    t.utilities[t.principal] = u_c;
    ExtReal system = u_c;
    ExtReal paid;
    bool    forfeit = false;
    for (auto const &a : su.scenario.agents)
    {
      t.payoffs[a.player] = ExtReal(0);
    }
    for (std::size_t k = 1; k < pf.size(); ++k)
    {
      if (pf[k] == nullptr)
      {
        continue;
      }
      PlayerId const &i = game_->slot(k).player;
      PaymentBreakdown pb;
      pb.delta_sum    = std::accumulate(deltas_[k].begin(), deltas_[k].end(), Rat(0));
      pb.modification = modification_[k];
      pb.bonus        = su.mechanism == Mechanism::SecondPrice ? su.selection.valuations.at(i).surplus : ExtReal(0);
      pb.mismatch     = violated_[k] || real_[k]->result != pf[k]->result;
      try
      {
        pb.base = -eval_utility(game_->slot(k).utility, *pf[k], real_results);
      }
      catch (EvalError const &e)
      {
        pb.mismatch = true;
        t.violations.push_back(i + ": " + e.what());
      }
      t.payments.emplace(i, pb);
      t.deltas.emplace(i, deltas_[k]);

      ExtReal const u_i = eval_utility(setup_->types[k - 1].utility, *real_[k], real_results);
      t.utilities[i]    = u_i;
      system += u_i;
      ExtReal const f = pb.total();
      if (f.is_neg_inf())
      {
        forfeit = true;
      }
      else
      {
        paid += f;
      }
      t.payoffs[i] = u_i + f;
    }
    t.principal_payoff        = forfeit ? ExtReal::pos_inf() : u_c - paid;
    t.payoffs[t.principal]    = t.principal_payoff;
    t.system_payoff           = system;

    for (std::size_t k = 1; k < pf.size(); ++k)
    {
      if (pf[k] == nullptr)
      {
        continue;
      }
      PlayerId const &i = game_->slot(k).player;
      Message         up;
      up.kind = Message::Kind::ResultDelivery;
      up.time = end_time;
      up.from = i;
      up.to   = t.principal;
      up.results.emplace(i, real_[k]->result);
      t.messages.push_back(up);
      Message down;
      down.kind = Message::Kind::ResultDelivery;
      down.time = end_time;
      down.from = t.principal;
      down.to   = i;
      for (auto const &[y, r] : t.real_results)
      {
        if (y != i)
        {
          down.results.emplace(y, r);
        }
      }
      t.messages.push_back(down);
    }
    return t;
  }

private:
  struct Setup
  {
    Scenario                        scenario;
    Mechanism                       mechanism = Mechanism::FirstPrice;
    std::vector<Strategy>           strategies;  // participants, by slot - 1
    std::vector<PlayerType>         types;
    std::vector<Application>        applications;
    std::map<PlayerId, std::string> labels;
    Selection                       selection;
  };

  Rat last_time() const
  {
    Rat t;
    if (!presumed_path_.empty())
    {
      t = presumed_path_.back().time;
    }
    if (!real_path_.empty() && real_path_.back().time > t)
    {
      t = real_path_.back().time;
    }
    return t;
  }

  PlayerId const &principal_id() const { return setup_->scenario.principal.player; }

  void violation(std::size_t slot, std::string what)
  {
    violated_[slot] = true;
    violations_.push_back(game_->slot(slot).player + ": " + std::move(what));
  }

  void run()
  {
    for (;;)
    {
      apply_due_modifications();
      auto const      ps = presumed_->next_slot();
      TreeNode const *pn = ps ? presumed_->frontier()[*ps] : nullptr;
      std::optional<std::size_t> rs;
      for (std::size_t k = 1; k < real_.size(); ++k)
      {
        TreeNode const *n = real_[k];
        if (n != nullptr && n->is_internal() && (!rs || n->time < real_[*rs]->time))
        {
          rs = k;
        }
      }
      if (!ps && !rs)
      {
        return;
      }
      bool presumed_first = ps.has_value();
      if (ps && rs)
      {
        Rat const &tr  = real_[*rs]->time;
        presumed_first = pn->time < tr || (pn->time == tr && pn->kind == NodeKind::Decision);
      }
      if (!(presumed_first ? presumed_step(*ps) : real_step(*rs)))
      {
        return;
      }
    }
  }

  bool presumed_step(std::size_t slot)
  {
    TreeNode const *n = presumed_->frontier()[slot];
    PlayerId const &y = game_->slot(slot).player;
    if (n->kind == NodeKind::Decision)
    {
      std::size_t const c = engine_->best_choice(*presumed_);
      if (slot > 0)
      {
        Message msg;
        msg.kind  = Message::Kind::DecisionRequest;
        msg.time  = n->time;
        msg.from  = principal_id();
        msg.to    = y;
        msg.node  = n->id;
        msg.index = c;
        messages_.push_back(std::move(msg));
        requests_[slot][n->id] = c;
      }
      presumed_path_.push_back({n->time, y, n->id, false, c, Rat(1)});
      if (slot == 0)
      {
        real_path_.push_back(presumed_path_.back());
      }
      *presumed_ = presumed_->advance(c);
      return true;
    }
    if (slot == 0)
    {
      pending_      = Pending{y, n->id, n->probabilities};
      pending_slot_ = 0;
      pending_real_ = false;
      return false;
    }
    std::vector<Rat> const d = announce_deltas(*engine_, *presumed_);
    if (setup_->mechanism == Mechanism::FirstPriceReliance)
    {
      Message msg;
      msg.kind   = Message::Kind::DeltaAnnouncement;
      msg.time   = n->time;
      msg.from   = principal_id();
      msg.to     = y;
      msg.node   = n->id;
      msg.deltas = d;
      messages_.push_back(std::move(msg));
    }
    std::optional<std::size_t> truth;
    auto const                 it = real_history_[slot].find(n->id);
    if (it != real_history_[slot].end())
    {
      truth = it->second;
    }
    std::size_t r = setup_->strategies[slot - 1].report(n->id, truth);
    if (r >= n->arity())
    {
      violation(slot, "reported branch " + std::to_string(r) + " at '" + n->id + "' does not exist");
      r = 0;
    }
    Message msg;
    msg.kind  = Message::Kind::ChanceReport;
    msg.time  = n->time;
    msg.from  = y;
    msg.to    = principal_id();
    msg.node  = n->id;
    msg.index = r;
    messages_.push_back(std::move(msg));
    deltas_[slot].push_back(d[r]);
    presumed_path_.push_back({n->time, y, n->id, true, r, n->probabilities[r]});
    *presumed_ = presumed_->advance(r);
    return true;
  }

  bool real_step(std::size_t slot)
  {
    TreeNode const *n = real_[slot];
    PlayerId const &y = game_->slot(slot).player;
    if (n->kind == NodeKind::Chance)
    {
      pending_      = Pending{y, n->id, n->probabilities};
      pending_slot_ = slot;
      pending_real_ = true;
      return false;
    }
    std::optional<std::size_t> req;
    auto const                 it = requests_[slot].find(n->id);
    if (it != requests_[slot].end())
    {
      req = it->second;
    }
    std::size_t c = setup_->strategies[slot - 1].execute(n->id, req);
    if (c >= n->arity())
    {
      violation(slot, "executed child " + std::to_string(c) + " at '" + n->id + "' does not exist");
      c = 0;
    }
    real_path_.push_back({n->time, y, n->id, false, c, Rat(1)});
    real_history_[slot][n->id] = c;
    real_[slot]                = n->children[c].get();
    return true;
  }

  void apply_due_modifications()
  {
    for (std::size_t k = 1; k < game_->size(); ++k)
    {
      TreeNode const *at = presumed_->frontier()[k];
      if (at == nullptr)
      {
        continue;
      }
      auto const &mods = setup_->strategies[k - 1].modifications;
      for (std::size_t m = 0; m < mods.size(); ++m)
      {
        if (applied_[k].count(m) == 0 && mods[m].at == at->id)
        {
          applied_[k].insert(m);
          modify(k, mods[m]);
          at = presumed_->frontier()[k];
        }
      }
    }
  }

  Rat modify(std::size_t slot, Modification const &mod)
  {
    Rat now = last_time();
    if (pending_)
    {
      now = pending_real_ ? real_[pending_slot_]->time : presumed_->frontier()[0]->time;
    }
    if (mod.subtree->is_internal() && mod.subtree->time <= now)
    {
      throw std::invalid_argument("modification subtree starts at " + mod.subtree->time.str() +
                                  ", not after the current time " + now.str());
    }
    std::vector<std::string> problems;
    validate_tree(*mod.subtree, game_->slot(slot).player, problems);
    if (!problems.empty())
    {
      throw std::invalid_argument("malformed modification subtree: " + problems.front());
    }
    NodePtr const new_root = replace_subtree(app_roots_[slot], mod.at, mod.subtree);

    PlayerType              principal{game_->slot(0).player, game_->slot(0).root, game_->slot(0).utility};
    std::vector<PlayerType> agents;
    for (std::size_t k = 1; k < game_->size(); ++k)
    {
      auto const &sl = game_->slot(k);
      agents.push_back({sl.player, k == slot ? new_root : sl.root, sl.utility});
    }
    auto       game   = std::make_shared<Game const>(principal, agents);
    auto       engine = std::make_shared<ValueEngine>(game);
    GameState  next   = presumed_->rebased(game, slot, mod.subtree.get());
    ExtReal const v_old = engine_->value(*presumed_);
    ExtReal const v_new = engine->value(next);
    if (!v_old.finite() || !v_new.finite())
    {
      throw std::invalid_argument("modification at '" + mod.at + "' makes the presumed value infinite");
    }
    Rat const diff = v_new.value() - v_old.value();
    modification_[slot] = modification_[slot] + diff;
    retired_.push_back(app_roots_[slot]);
    app_roots_[slot] = new_root;
    game_            = game;
    engine_          = engine;
    *presumed_       = next;

    Message msg;
    msg.kind        = Message::Kind::Modification;
    msg.time        = now;
    msg.from        = game_->slot(slot).player;
    msg.to          = principal_id();
    msg.node        = mod.at;
    msg.amount      = diff;
    msg.application = Application::arbitrary(msg.from, mod.subtree, game_->slot(slot).utility);
    messages_.push_back(std::move(msg));

    if (real_[slot] != nullptr && find_node(real_roots_[slot], mod.at))
    {
      NodePtr const real_root = replace_subtree(real_roots_[slot], mod.at, mod.subtree);
      if (real_[slot]->id == mod.at)
      {
        real_[slot] = mod.subtree.get();
      }
      else if (NodePtr same = find_node(real_root, real_[slot]->id))
      {
        real_[slot] = same.get();
      }
      retired_.push_back(real_roots_[slot]);
      real_roots_[slot] = real_root;
    }
    return diff;
  }

  std::shared_ptr<Setup const>                     setup_;
  GamePtr                                          game_;
  std::shared_ptr<ValueEngine>                     engine_;
  std::unique_ptr<GameState>                       presumed_;
  std::vector<NodePtr>                             app_roots_;
  std::vector<NodePtr>                             real_roots_;
  std::vector<NodePtr>                             retired_;
  Frontier                                         real_;
  std::vector<std::map<std::string, std::size_t>>  real_history_;
  std::vector<std::map<std::string, std::size_t>>  requests_;
  std::vector<std::vector<Rat>>                    deltas_;
  std::vector<Rat>                                 modification_;
  std::vector<bool>                                violated_;
  std::vector<std::set<std::size_t>>               applied_;
  std::vector<Message>                             messages_;
  std::vector<PathEvent>                           presumed_path_;
  std::vector<PathEvent>                           real_path_;
  std::vector<std::string>                         violations_;
  Rat                                              probability_{1};
  std::optional<Pending>                           pending_;
  std::size_t                                      pending_slot_ = 0;
  bool                                             pending_real_ = false;
};

/// Deterministic random source for real chance draws.
class ChanceSampler
{
public:
  explicit ChanceSampler(std::uint64_t seed, std::uint64_t stream = 0)
    : rng_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL)))
  {}

  /// Exact draw: integer uniform over the common denominator.
  std::size_t draw(std::vector<Rat> const &probabilities)
  {
    std::uint64_t l = 1;
    for (auto const &p : probabilities)
    {
      std::uint64_t const d = static_cast<std::uint64_t>(p.den());
      l                     = std::lcm(l, d);
      if (l > (std::uint64_t{1} << 62))
      {
        throw std::overflow_error("probability denominators too large to sample exactly");
      }
    }
    std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % l;
    std::uint64_t x = rng_();
    while (x >= limit)
    {
      x = rng_();
    }
    x %= l;
    std::uint64_t acc = 0;
    for (std::size_t k = 0; k < probabilities.size(); ++k)
    {
      acc += static_cast<std::uint64_t>(probabilities[k].num()) * (l / static_cast<std::uint64_t>(probabilities[k].den()));
      if (x < acc)
      {
        return k;
      }
    }
    return probabilities.size() - 1;
  }

  static std::uint64_t mix(std::uint64_t z)
  {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::mt19937_64 rng_;
};

inline Trace run_mechanism(Scenario const &s, std::map<PlayerId, Strategy> const &strategies, Mechanism m,
                           std::uint64_t seed, std::uint64_t stream = 0)
{
  Execution     ex(s, strategies, m);
  ChanceSampler rng(seed, stream);
  while (auto const &p = ex.pending())
  {
    ex.resolve(rng.draw(p->probabilities));
  }
  return ex.finish();
}

/// Runs with real chance outcomes chosen by `pick`.
inline Trace run_forced(Execution ex, std::function<std::size_t(Execution::Pending const &)> const &pick)
{
  while (auto const &p = ex.pending())
  {
    ex.resolve(pick(*p));
  }
  return ex.finish();
}

/// Visits the trace of every real chance path; probabilities are exact.
inline void for_each_outcome(Execution const &root, std::function<void(Trace const &)> const &fn)
{
  std::function<void(Execution const &)> go = [&](Execution const &ex) {
    if (ex.finished())
    {
      fn(ex.finish());
      return;
    }
    for (std::size_t k = 0; k < ex.pending()->probabilities.size(); ++k)
    {
      Execution next = ex;
      next.resolve(k);
      go(next);
    }
  };
  go(root);
}

/// First-price payment of agent `i` recomputed from r_i and the messages
/// exchanged between `i` and the principal only.
inline ExtReal reliance_payment(Trace const &t, PlayerId const &i)
{
  auto const r_it = t.real_results.find(i);
  if (r_it == t.real_results.end())
  {
    throw std::invalid_argument("agent '" + i + "' has no result in this trace");
  }
  std::vector<Message const *> inbox;
  for (auto const &m : t.messages)
  {
    if ((m.from == i && m.to == t.principal) || (m.from == t.principal && m.to == i))
    {
      inbox.push_back(&m);
    }
  }
  std::optional<Application>      app;
  NodePtr                         root;
  TreeNode const                 *at = nullptr;
  Rat                             deltas;
  Rat                             modification;
  std::optional<std::vector<Rat>> announced;
  std::map<PlayerId, ResultLabel> others;
  bool                            consistent = true;

  for (auto const *m : inbox)
  {
    switch (m->kind)
    {
    case Message::Kind::Application:
      app  = m->application;
      root = app->tree;
      at   = root.get();
      break;
    case Message::Kind::DecisionRequest:
      if (at == nullptr || at->id != m->node || at->kind != NodeKind::Decision || m->index >= at->arity())
      {
        return ExtReal::neg_inf();
      }
      at = at->children[m->index].get();
      break;
    case Message::Kind::DeltaAnnouncement:
      announced = m->deltas;
      break;
    case Message::Kind::ChanceReport:
      if (at == nullptr || at->id != m->node || at->kind != NodeKind::Chance || m->index >= at->arity() ||
          !announced || announced->size() != at->arity())
      {
        return ExtReal::neg_inf();
      }
      deltas = deltas + (*announced)[m->index];
      announced.reset();
      at = at->children[m->index].get();
      break;
    case Message::Kind::Modification:
      if (at == nullptr || at->id != m->node || !m->application)
      {
        return ExtReal::neg_inf();
      }
      root         = replace_subtree(root, m->node, m->application->tree);
      at           = m->application->tree.get();
      modification = modification + m->amount;
      break;
    case Message::Kind::ResultDelivery:
      if (m->from == t.principal)
      {
        others = m->results;
      }
      else if (m->results.count(i) == 0 || m->results.at(i) != r_it->second)
      {
        consistent = false;
      }
      break;
    }
  }
  if (!app || at == nullptr || !at->is_leaf() || !consistent || at->result != r_it->second)
  {
    return ExtReal::neg_inf();
  }
  std::map<std::string, ResultLabel const *> results;
  for (auto const &[y, r] : others)
  {
    results.emplace(y, &r);
  }
  results.emplace(i, &r_it->second);
  try
  {
    return -eval_utility(app->utility, *at, results) + ExtReal(deltas) + ExtReal(modification);
  }
  catch (EvalError const &)
  {
    return ExtReal::neg_inf();
  }
}

}  // namespace stochmech
