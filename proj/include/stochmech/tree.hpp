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

#include "stochmech/rational.hpp"
#include "stochmech/result.hpp"

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stochmech {

enum class NodeKind
{
  Decision,
  Chance,
  Leaf
};

inline char const *kind_name(NodeKind k)
{
  switch (k)
  {
  case NodeKind::Decision:
    return "decision";
  case NodeKind::Chance:
    return "chance";
  default:
    return "leaf";
  }
}

struct TreeNode;
using NodePtr = std::shared_ptr<TreeNode const>;

/// Node of a stochastic decision tree. Immutable once built; subtrees are
/// shared between trees that differ elsewhere.
struct TreeNode
{
  std::string          id;
  Rat                  time;
  bool                 timed = true;  // leaves may omit their time
  NodeKind             kind  = NodeKind::Leaf;
  std::vector<NodePtr> children;
  std::vector<Rat>     probabilities;  // chance nodes only, parallel to children
  ResultLabel          result;         // leaves only
  Rat                  cost;           // leaves only

  bool is_leaf() const { return kind == NodeKind::Leaf; }
  bool is_internal() const { return kind != NodeKind::Leaf; }
  std::size_t arity() const { return children.size(); }
};

inline NodePtr make_leaf(std::string id, ResultLabel result, Rat cost)
{
  TreeNode n;
  n.id     = std::move(id);
  n.kind   = NodeKind::Leaf;
  n.timed  = false;
  n.result = std::move(result);
  n.cost   = cost;
  return std::make_shared<TreeNode const>(std::move(n));
}

inline NodePtr make_leaf(std::string id, Rat time, ResultLabel result, Rat cost)
{
  TreeNode n;
  n.id     = std::move(id);
  n.kind   = NodeKind::Leaf;
  n.time   = time;
  n.result = std::move(result);
  n.cost   = cost;
  return std::make_shared<TreeNode const>(std::move(n));
}

inline NodePtr make_decision(std::string id, Rat time, std::vector<NodePtr> children)
{
  TreeNode n;
  n.id       = std::move(id);
  n.kind     = NodeKind::Decision;
  n.time     = time;
  n.children = std::move(children);
  return std::make_shared<TreeNode const>(std::move(n));
}

inline NodePtr make_chance(std::string id, Rat time, std::vector<std::pair<Rat, NodePtr>> branches)
{
  TreeNode n;
  n.id   = std::move(id);
  n.kind = NodeKind::Chance;
  n.time = time;
  for (auto &[p, c] : branches)
  {
    n.probabilities.push_back(p);
    n.children.push_back(std::move(c));
  }
  return std::make_shared<TreeNode const>(std::move(n));
}

/// Shorthand for a single-attribute result such as {status: success}.
inline ResultLabel result_of(std::string const &attr, Atom value)
{
  ResultLabel r;
  r.atoms.emplace(attr, std::move(value));
  return r;
}

/// Preorder visit; `parent` is null for the root.
inline void for_each_node(TreeNode const &root,
                          std::function<void(TreeNode const &, TreeNode const *)> const &fn,
                          TreeNode const *parent = nullptr)
{
  fn(root, parent);
  for (auto const &c : root.children)
  {
    for_each_node(*c, fn, &root);
  }
}

inline NodePtr find_node(NodePtr const &root, std::string const &id)
{
  if (root->id == id)
  {
    return root;
  }
  for (auto const &c : root->children)
  {
    if (auto hit = find_node(c, id))
    {
      return hit;
    }
  }
  return nullptr;
}

/// Copy of `root` with the node named `id` replaced by `replacement`.
/// Untouched subtrees are shared. Throws if `id` does not occur.
inline NodePtr replace_subtree(NodePtr const &root, std::string const &id, NodePtr replacement)
{
  std::function<NodePtr(NodePtr const &, bool &)> go = [&](NodePtr const &n, bool &hit) -> NodePtr {
    if (n->id == id)
    {
      hit = true;
      return replacement;
    }
    std::vector<NodePtr> kids;
    bool                 changed = false;
    for (auto const &c : n->children)
    {
      bool    h = false;
      NodePtr k = go(c, h);
      changed   = changed || h;
      kids.push_back(std::move(k));
    }
    if (!changed)
    {
      return n;
    }
    hit       = true;
    TreeNode copy = *n;
    copy.children = std::move(kids);
    return std::make_shared<TreeNode const>(std::move(copy));
  };
  bool    hit = false;
  NodePtr out = go(root, hit);
  if (!hit)
  {
    throw std::invalid_argument("no node with id '" + id + "'");
  }
  return out;
}

/// Rebuilds the tree bottom-up, letting `fn` rewrite every node after its
/// children have been rewritten.
inline NodePtr transform_tree(NodePtr const &root, std::function<TreeNode(TreeNode)> const &fn)
{
  TreeNode copy = *root;
  for (auto &c : copy.children)
  {
    c = transform_tree(c, fn);
  }
  return std::make_shared<TreeNode const>(fn(std::move(copy)));
}

inline bool tree_equal(TreeNode const &a, TreeNode const &b)
{
  if (a.id != b.id || a.kind != b.kind || a.timed != b.timed || (a.timed && a.time != b.time) ||
      a.children.size() != b.children.size() || a.probabilities != b.probabilities)
  {
    return false;
  }
  if (a.is_leaf() && (a.result != b.result || a.cost != b.cost))
  {
    return false;
  }
  for (std::size_t k = 0; k < a.children.size(); ++k)
  {
    if (!tree_equal(*a.children[k], *b.children[k]))
    {
      return false;
    }
  }
  return true;
}

inline std::size_t leaf_count(TreeNode const &n)
{
  if (n.is_leaf())
  {
    return 1;
  }
  std::size_t total = 0;
  for (auto const &c : n.children)
  {
    total += leaf_count(*c);
  }
  return total;
}

}  // namespace stochmech
