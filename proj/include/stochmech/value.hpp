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

#include "stochmech/game.hpp"

#include <atomic>
#include <bit>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace stochmech {

/// Raised when an identity that holds by construction is observed to fail.
struct InvariantBreach : std::logic_error
{
  using std::logic_error::logic_error;
};

namespace detail {

struct FrontierHash
{
  std::size_t operator()(Frontier const &f) const noexcept
  {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (auto const *p : f)
    {
      h ^= std::hash<void const *>{}(p) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace detail

struct MemoStats
{
  std::size_t states    = 0;
  std::size_t hits      = 0;
  std::size_t decisions = 0;
  std::size_t chances   = 0;
};

/// Memoized expectimax over one game. Keys are frontier vectors, which also
/// encode the accepted set through their null entries.
class ValueEngine
{
public:
  explicit ValueEngine(GamePtr game)
    : game_(std::move(game))
  {}

  GamePtr const &game() const { return game_; }

  ExtReal value(Frontier const &f) const { return entry(f).value; }

  ExtReal value(GameState const &st) const
  {
    require_same_game(st);
    return value(st.frontier());
  }

  /// v(G_0(app_S)) for the agent subset S.
  ExtReal subset_value(AgentMask accepted) const { return value(GameState(game_, accepted)); }

  /// Child chosen by the optimal profile at a decision state (lowest index
  /// among maximizers).
  std::size_t best_choice(GameState const &st) const
  {
    require_same_game(st);
    auto const slot = st.next_slot();
    if (!slot || st.frontier()[*slot]->kind != NodeKind::Decision)
    {
      throw std::invalid_argument("best_choice needs a decision state");
    }
    return static_cast<std::size_t>(entry(st.frontier()).best);
  }

  /// d(ch) = v(after) - v(before) for branch `index` of a chance state.
  ExtReal chance_delta(GameState const &before, std::size_t index) const
  {
    require_same_game(before);
    auto const slot = before.next_slot();
    if (!slot || before.frontier()[*slot]->kind != NodeKind::Chance)
    {
      throw std::invalid_argument("chance_delta needs a chance state");
    }
    return value(before.advance(index)) - value(before);
  }

  /// Deltas for every branch of a chance state. Their probability-weighted
  /// sum is zero whenever the values involved are finite.
  std::vector<ExtReal> chance_deltas(GameState const &before) const
  {
    auto const      slot = before.next_slot();
    TreeNode const *n    = slot ? before.frontier()[*slot] : nullptr;
    if (n == nullptr || n->kind != NodeKind::Chance)
    {
      throw std::invalid_argument("chance_deltas needs a chance state");
    }
    std::vector<ExtReal> out;
    ExtReal              weighted;
    bool                 finite = true;
    for (std::size_t k = 0; k < n->arity(); ++k)
    {
      out.push_back(chance_delta(before, k));
      finite = finite && out.back().finite();
      if (finite)
      {
        weighted += ExtReal(n->probabilities[k]) * out.back();
      }
    }
    if (finite && weighted != ExtReal(0))
    {
      throw InvariantBreach("weighted chance deltas sum to " + weighted.str() + " at '" + n->id + "'");
    }
    return out;
  }

  /// Follows the optimal profile from `st`, resolving chance points with
  /// `pick`, and returns the endstate reached.
  GameState follow(GameState st, std::function<std::size_t(GameState const &)> const &pick) const
  {
    while (auto slot = st.next_slot())
    {
      TreeNode const *n = st.frontier()[*slot];
      st                = st.advance(n->kind == NodeKind::Decision ? best_choice(st) : pick(st));
    }
    return st;
  }

  MemoStats stats() const
  {
    std::shared_lock lock(mutex_);
    MemoStats        out = stats_;
    out.hits             = hits_.load();
    return out;
  }

private:
  struct Entry
  {
    ExtReal value;
    int     best = -1;
  };

  void require_same_game(GameState const &st) const
  {
    if (st.game() != game_)
    {
      throw std::invalid_argument("state belongs to a different game");
    }
  }

  Entry entry(Frontier const &f) const
  {
    {
      std::shared_lock lock(mutex_);
      auto             it = memo_.find(f);
      if (it != memo_.end())
      {
        ++hits_;
        return it->second;
      }
    }
    Entry      e;
    auto const slot = next_event_slot(f);
    if (!slot)
    {
      e.value = system_payoff(*game_, f);
    }
    else
    {
      TreeNode const *n    = f[*slot];
      Frontier        next = f;
      if (n->kind == NodeKind::Decision)
      {
        for (std::size_t k = 0; k < n->arity(); ++k)
        {
          next[*slot]     = n->children[k].get();
          ExtReal const v = entry(next).value;
          if (e.best < 0 || v > e.value)
          {
            e.value = v;
            e.best  = static_cast<int>(k);
          }
        }
      }
      else
      {
        for (std::size_t k = 0; k < n->arity(); ++k)
        {
          next[*slot] = n->children[k].get();
          e.value += ExtReal(n->probabilities[k]) * entry(next).value;
        }
      }
    }
    std::unique_lock lock(mutex_);
    auto [it, inserted] = memo_.emplace(f, e);
    if (inserted)
    {
      ++stats_.states;
      if (slot)
      {
        ++(f[*slot]->kind == NodeKind::Decision ? stats_.decisions : stats_.chances);
      }
    }
    return it->second;
  }

  GamePtr                                                     game_;
  mutable std::shared_mutex                                   mutex_;
  mutable std::unordered_map<Frontier, Entry, detail::FrontierHash> memo_;
  mutable MemoStats                                           stats_;
  mutable std::atomic<std::size_t>                           hits_{0};
};

/// Checks that each decision state's value is the max of its successors and
/// each chance state's weighted deltas vanish, over every state reachable
/// from `st`. Returns the number of states checked.
inline std::size_t verify_local_identities(ValueEngine const &engine, GameState const &st)
{
  std::set<Frontier> seen;
  std::size_t        checked = 0;
  std::function<void(GameState const &)> walk = [&](GameState const &s) {
    if (!seen.insert(s.frontier()).second)
    {
      return;
    }
    ++checked;
    Expansion const ex = expand(s);
    if (ex.kind == Expansion::Kind::End)
    {
      if (engine.value(s) != endstate_system_payoff(s))
      {
        throw InvariantBreach("endstate value differs from system payoff");
      }
      return;
    }
    ExtReal const v = engine.value(s);
    if (ex.kind == Expansion::Kind::DecisionPoint)
    {
      ExtReal best = ExtReal::neg_inf();
      for (auto const &c : ex.successors)
      {
        best = max(best, engine.value(c));
      }
      if (best != v)
      {
        throw InvariantBreach("decision value " + v.str() + " differs from best successor " + best.str());
      }
    }
    else if (v.finite())
    {
      Rat sum;
      for (std::size_t k = 0; k < ex.successors.size(); ++k)
      {
        sum = sum + ex.probabilities[k] * (engine.value(ex.successors[k]) - v).value();
      }
      if (!sum.is_zero())
      {
        throw InvariantBreach("weighted chance deltas sum to " + sum.str());
      }
    }
    for (auto const &c : ex.successors)
    {
      walk(c);
    }
  };
  walk(st);
  return checked;
}

struct ApplicationValuation
{
  PlayerId player;
  ExtReal  v_all;      // v(app)
  ExtReal  v_minus_i;  // v(app_{-i})
  ExtReal  surplus;    // v+ = v(app) - v(app_{-i})
  ExtReal  signed_value;
  bool     accepted = false;
};

struct Selection
{
  GamePtr                                     game;
  std::shared_ptr<ValueEngine>                engine;
  AgentMask                                   accepted = 0;
  std::set<PlayerId>                          accepted_ids;
  ExtReal                                     value;  // v(app)
  std::vector<ExtReal>                        subset_values;  // indexed by mask
  std::map<PlayerId, ApplicationValuation>    valuations;

  GameState initial() const { return GameState(game, accepted); }
};

namespace detail {

/// a - b where both may be -inf; equal infinities give `both_neg_inf`.
inline ExtReal value_gap(ExtReal const &a, ExtReal const &b, ExtReal const &both_neg_inf)
{
  if (a.is_neg_inf() && b.is_neg_inf())
  {
    return both_neg_inf;
  }
  return a - b;
}

/// Sorted agent ids of a mask, used for the lexicographic tie-break.
inline std::vector<PlayerId> sorted_ids(Game const &g, AgentMask m)
{
  auto const s = g.ids_of(m);
  return {s.begin(), s.end()};
}

}  // namespace detail

/// Exhaustive subset search: the accepted set maximizes v(G_0(app_S)); ties
/// go to the smaller set, then to the lexicographically smaller id list.
inline Selection select_accepted(GamePtr game)
{
  std::size_t const n = game->agent_count();
  if (n > kMaxAgents)
  {
    throw std::invalid_argument("too many agents for exhaustive subset search (" + std::to_string(n) + " > " +
                                std::to_string(kMaxAgents) + ")");
  }
  Selection sel;
  sel.game   = game;
  sel.engine = std::make_shared<ValueEngine>(game);
  AgentMask const subsets = AgentMask{1} << n;
  sel.subset_values.reserve(subsets);
  for (AgentMask m = 0; m < subsets; ++m)
  {
    sel.subset_values.push_back(sel.engine->subset_value(m));
  }

  auto better = [&](AgentMask a, AgentMask b) {
    if (sel.subset_values[a] != sel.subset_values[b])
    {
      return sel.subset_values[a] > sel.subset_values[b];
    }
    int const ca = std::popcount(a);
    int const cb = std::popcount(b);
    if (ca != cb)
    {
      return ca < cb;
    }
    return detail::sorted_ids(*game, a) < detail::sorted_ids(*game, b);
  };
  AgentMask best = 0;
  for (AgentMask m = 1; m < subsets; ++m)
  {
    if (better(m, best))
    {
      best = m;
    }
  }
  sel.accepted     = best;
  sel.accepted_ids = game->ids_of(best);
  sel.value        = sel.subset_values[best];

  for (std::size_t k = 1; k <= n; ++k)
  {
    AgentMask const bit = AgentMask{1} << (k - 1);
    ExtReal         with_i    = ExtReal::neg_inf();
    ExtReal         without_i = ExtReal::neg_inf();
    for (AgentMask m = 0; m < subsets; ++m)
    {
      (m & bit ? with_i : without_i) = max(m & bit ? with_i : without_i, sel.subset_values[m]);
    }
    ApplicationValuation av;
    av.player       = game->slot(k).player;
    av.v_all        = sel.value;
    av.v_minus_i    = without_i;
    av.surplus      = detail::value_gap(sel.value, without_i, ExtReal(0));
    av.signed_value = detail::value_gap(with_i, without_i, ExtReal::neg_inf());
    av.accepted     = (best & bit) != 0;
    sel.valuations.emplace(av.player, av);
  }
  return sel;
}

inline Selection select_accepted(PlayerType const &principal, std::vector<Application> const &apps)
{
  return select_accepted(Game::of(principal, apps));
}

inline Selection select_accepted(Scenario const &s) { return select_accepted(Game::of(s)); }

/// v(G): the value of the true game with free choice of the accepted set.
inline ExtReal game_value(Scenario const &s) { return select_accepted(s).value; }

/// v((t,u)_{-j}): best value over subsets that leave agent `j` out.
inline ExtReal game_value_without(Scenario const &s, PlayerId const &j)
{
  auto const sel = select_accepted(s);
  auto const it  = sel.valuations.find(j);
  if (it == sel.valuations.end())
  {
    throw std::invalid_argument("unknown agent '" + j + "'");
  }
  return it->second.v_minus_i;
}

}  // namespace stochmech
