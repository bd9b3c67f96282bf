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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochmech {

/// Bit k set <=> agent slot k+1 is accepted.
using AgentMask = std::uint32_t;

inline constexpr std::size_t kMaxAgents = 12;

/// The players of one (presumed or real) game. Slot 0 is the principal,
/// slots 1..n are the agents in submission order.
class Game
{
public:
  struct Slot
  {
    PlayerId    player;
    NodePtr     root;
    UtilityExpr utility;
  };

  Game(PlayerType const &principal, std::vector<PlayerType> const &agents)
  {
    if (agents.size() > 31)
    {
      throw std::invalid_argument("too many agents for one game");
    }
    slots_.push_back({principal.player, principal.tree, principal.utility});
    for (auto const &a : agents)
    {
      slots_.push_back({a.player, a.tree, a.utility});
    }
  }

  static std::shared_ptr<Game const> of(Scenario const &s)
  {
    return std::make_shared<Game const>(s.principal, s.agents);
  }

  static std::shared_ptr<Game const> of(PlayerType const &principal, std::vector<Application> const &apps)
  {
    std::vector<PlayerType> agents;
    for (auto const &a : apps)
    {
      agents.push_back(a.as_type());
    }
    return std::make_shared<Game const>(principal, agents);
  }

  std::size_t size() const { return slots_.size(); }
  std::size_t agent_count() const { return slots_.size() - 1; }
  Slot const &slot(std::size_t k) const { return slots_.at(k); }

  std::optional<std::size_t> slot_of(PlayerId const &id) const
  {
    for (std::size_t k = 0; k < slots_.size(); ++k)
    {
      if (slots_[k].player == id)
      {
        return k;
      }
    }
    return std::nullopt;
  }

  AgentMask mask_of(std::set<PlayerId> const &ids) const
  {
    AgentMask m = 0;
    for (auto const &id : ids)
    {
      auto k = slot_of(id);
      if (!k || *k == 0)
      {
        throw std::invalid_argument("unknown agent '" + id + "'");
      }
      m |= AgentMask{1} << (*k - 1);
    }
    return m;
  }

  std::set<PlayerId> ids_of(AgentMask m) const
  {
    std::set<PlayerId> out;
    for (std::size_t k = 1; k < slots_.size(); ++k)
    {
      if (m & (AgentMask{1} << (k - 1)))
      {
        out.insert(slots_[k].player);
      }
    }
    return out;
  }

  AgentMask all_agents() const
  {
    return agent_count() == 0 ? 0 : static_cast<AgentMask>((std::uint64_t{1} << agent_count()) - 1);
  }

private:
  std::vector<Slot> slots_;
};

using GamePtr = std::shared_ptr<Game const>;

/// Frontier vector: one current node per slot, null for non-accepted agents.
using Frontier = std::vector<TreeNode const *>;

struct ResolvedEvent
{
  enum class Kind
  {
    DecisionTaken,
    ChanceResolved
  };
  Rat         time;
  std::size_t slot = 0;
  PlayerId    owner;
  std::string node;
  Kind        kind  = Kind::DecisionTaken;
  std::size_t index = 0;
  Rat         probability;  // chance events only
};

/// Slot owning the earliest unresolved internal node, or nullopt when every
/// frontier node is a leaf. Equal times are a modelling error.
inline std::optional<std::size_t> next_event_slot(Frontier const &f)
{
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < f.size(); ++k)
  {
    TreeNode const *n = f[k];
    if (n == nullptr || n->is_leaf())
    {
      continue;
    }
    if (!best || n->time < f[*best]->time)
    {
      best = k;
    }
    else if (n->time == f[*best]->time)
    {
      throw std::logic_error("simultaneous events at time " + n->time.str() + " ('" + f[*best]->id +
                             "' and '" + n->id + "')");
    }
  }
  return best;
}

/// State of the product game: accepted set, frontier, and resolved history.
class GameState
{
public:
  GameState(GamePtr game, AgentMask accepted)
    : game_(std::move(game))
    , accepted_(accepted)
  {
    frontier_.assign(game_->size(), nullptr);
    frontier_[0] = game_->slot(0).root.get();
    for (std::size_t k = 1; k < game_->size(); ++k)
    {
      if (accepted_ & (AgentMask{1} << (k - 1)))
      {
        frontier_[k] = game_->slot(k).root.get();
      }
    }
  }

  GamePtr const        &game() const { return game_; }
  AgentMask             accepted() const { return accepted_; }
  Frontier const       &frontier() const { return frontier_; }
  std::vector<ResolvedEvent> const &history() const { return history_; }

  bool participates(std::size_t slot) const { return frontier_[slot] != nullptr; }

  std::optional<std::size_t> next_slot() const { return next_event_slot(frontier_); }
  bool                       is_end() const { return !next_slot().has_value(); }

  /// Time of the last resolved event, 0 before any.
  Rat now() const { return history_.empty() ? Rat(0) : history_.back().time; }

  /// Successor after the next event takes child `index`.
  GameState advance(std::size_t index) const
  {
    auto const slot = next_slot();
    if (!slot)
    {
      throw std::logic_error("advance called on an endstate");
    }
    TreeNode const *n = frontier_[*slot];
    if (index >= n->arity())
    {
      throw std::out_of_range("child index " + std::to_string(index) + " out of range at node '" + n->id + "'");
    }
    GameState next = *this;
    ResolvedEvent ev;
    ev.time  = n->time;
    ev.slot  = *slot;
    ev.owner = game_->slot(*slot).player;
    ev.node  = n->id;
    ev.index = index;
    if (n->kind == NodeKind::Chance)
    {
      ev.kind        = ResolvedEvent::Kind::ChanceResolved;
      ev.probability = n->probabilities[index];
    }
    next.frontier_[*slot] = n->children[index].get();
    next.history_.push_back(std::move(ev));
    return next;
  }

  /// Same history, but slot `slot` now sits at `node` of a different game
  /// (used when an application is modified mid-run).
  GameState rebased(GamePtr game, std::size_t slot, TreeNode const *node) const
  {
    GameState next      = *this;
    next.game_          = std::move(game);
    next.frontier_[slot] = node;
    return next;
  }

  std::string dump() const
  {
    std::ostringstream os;
    os << "state @" << now() << "\n";
    for (std::size_t k = 0; k < frontier_.size(); ++k)
    {
      os << "  " << game_->slot(k).player << ": ";
      if (frontier_[k] == nullptr)
      {
        os << "(not accepted)\n";
        continue;
      }
      TreeNode const *n = frontier_[k];
      os << kind_name(n->kind) << " '" << n->id << "'";
      if (n->is_internal())
      {
        os << " t=" << n->time;
      }
      else
      {
        os << " " << n->result.str() << " cost=" << n->cost;
      }
      os << "\n";
    }
    for (auto const &ev : history_)
    {
      os << "  [" << ev.time << "] " << ev.owner << " " << ev.node
         << (ev.kind == ResolvedEvent::Kind::ChanceResolved ? " chance -> " : " decision -> ") << ev.index
         << "\n";
    }
    return os.str();
  }

private:
  GamePtr                    game_;
  AgentMask                  accepted_ = 0;
  Frontier                   frontier_;
  std::vector<ResolvedEvent> history_;
};

inline GameState initial_state(GamePtr game, std::set<PlayerId> const &accepted)
{
  AgentMask const m = game->mask_of(accepted);
  return GameState(std::move(game), m);
}

struct Expansion
{
  enum class Kind
  {
    DecisionPoint,
    ChancePoint,
    End
  };
  Kind                   kind = Kind::End;
  std::size_t            owner_slot = 0;
  PlayerId               owner;
  std::vector<GameState> successors;
  std::vector<Rat>       probabilities;  // ChancePoint only
};

inline Expansion expand(GameState const &st)
{
  Expansion  out;
  auto const slot = st.next_slot();
  if (!slot)
  {
    out.kind = Expansion::Kind::End;
    return out;
  }
  TreeNode const *n = st.frontier()[*slot];
  out.kind          = n->kind == NodeKind::Chance ? Expansion::Kind::ChancePoint : Expansion::Kind::DecisionPoint;
  out.owner_slot    = *slot;
  out.owner         = st.game()->slot(*slot).player;
  for (std::size_t k = 0; k < n->arity(); ++k)
  {
    out.successors.push_back(st.advance(k));
  }
  if (n->kind == NodeKind::Chance)
  {
    out.probabilities = n->probabilities;
  }
  return out;
}

/// Results of every participant at an endstate frontier.
inline std::map<std::string, ResultLabel const *> frontier_results(Game const &g, Frontier const &f)
{
  std::map<std::string, ResultLabel const *> out;
  for (std::size_t k = 0; k < f.size(); ++k)
  {
    if (f[k] != nullptr)
    {
      out.emplace(g.slot(k).player, &f[k]->result);
    }
  }
  return out;
}

/// Sum over participants of u_y(l_y, r) at an all-leaf frontier.
inline ExtReal system_payoff(Game const &g, Frontier const &f)
{
  auto const results = frontier_results(g, f);
  ExtReal    total;
  for (std::size_t k = 0; k < f.size(); ++k)
  {
    if (f[k] != nullptr)
    {
      total += eval_utility(g.slot(k).utility, *f[k], results);
    }
  }
  return total;
}

inline ExtReal endstate_system_payoff(GameState const &st)
{
  if (!st.is_end())
  {
    throw std::logic_error("endstate_system_payoff called on a non-terminal state");
  }
  return system_payoff(*st.game(), st.frontier());
}

}  // namespace stochmech
