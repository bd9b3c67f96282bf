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

#include "stochmech/ext_real.hpp"
#include "stochmech/result.hpp"

#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stochmech {

struct ExprSyntaxError : std::runtime_error
{
  ExprSyntaxError(std::string const &msg, std::size_t column)
    : std::runtime_error(msg + " at column " + std::to_string(column + 1))
    , column(column)
  {}
  std::size_t column;
};

/// Raised when a utility cannot be evaluated: an absent player referenced
/// without a present() guard, a missing attribute, or a type mismatch.
struct EvalError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Everything a utility expression may observe at an endstate.
struct EvalContext
{
  Rat                                             own_cost;
  ResultLabel const                              *own_result = nullptr;
  std::map<std::string, ResultLabel const *> const *results  = nullptr;
};

namespace detail {

enum class ExprKind
{
  Number,
  NegInf,
  String,
  ResultRef,
  OwnRef,
  Present,
  Neg,
  Not,
  Binary,
  If,
  Max,
  Min
};

enum class BinOp
{
  Add,
  Sub,
  Mul,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  And,
  Or
};

inline char const *op_text(BinOp op)
{
  switch (op)
  {
  case BinOp::Add:
    return "+";
  case BinOp::Sub:
    return "-";
  case BinOp::Mul:
    return "*";
  case BinOp::Eq:
    return "=";
  case BinOp::Ne:
    return "!=";
  case BinOp::Lt:
    return "<";
  case BinOp::Le:
    return "<=";
  case BinOp::Gt:
    return ">";
  case BinOp::Ge:
    return ">=";
  case BinOp::And:
    return "and";
  case BinOp::Or:
    return "or";
  }
  return "?";
}

struct ExprNode;
using ExprPtr = std::shared_ptr<ExprNode const>;

struct ExprNode
{
  ExprKind             kind = ExprKind::Number;
  Rat                  number;
  std::string          text;  // string literal or player id
  std::string          attr;
  BinOp                op = BinOp::Add;
  std::vector<ExprPtr> args;
};

inline ExprPtr make(ExprNode n)
{
  return std::make_shared<ExprNode const>(std::move(n));
}

inline ExprPtr number(Rat v)
{
  ExprNode n;
  n.kind   = ExprKind::Number;
  n.number = v;
  return make(std::move(n));
}

inline ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b)
{
  ExprNode n;
  n.kind = ExprKind::Binary;
  n.op   = op;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

inline ExprPtr negate(ExprPtr a)
{
  if (a->kind == ExprKind::Number)
  {
    return number(-a->number);
  }
  ExprNode n;
  n.kind = ExprKind::Neg;
  n.args = {std::move(a)};
  return make(std::move(n));
}

inline void print(ExprNode const &e, std::string &out)
{
  switch (e.kind)
  {
  case ExprKind::Number:
    out += e.number.str();
    return;
  case ExprKind::NegInf:
    out += "-inf";
    return;
  case ExprKind::String:
    out += "'" + e.text + "'";
    return;
  case ExprKind::ResultRef:
    out += "r[" + e.text + "]." + e.attr;
    return;
  case ExprKind::OwnRef:
    out += "own." + e.attr;
    return;
  case ExprKind::Present:
    out += "present(" + e.text + ")";
    return;
  case ExprKind::Neg:
    out += "(-";
    print(*e.args[0], out);
    out += ")";
    return;
  case ExprKind::Not:
    out += "(not ";
    print(*e.args[0], out);
    out += ")";
    return;
  case ExprKind::Binary:
    out += "(";
    print(*e.args[0], out);
    out += std::string(" ") + op_text(e.op) + " ";
    print(*e.args[1], out);
    out += ")";
    return;
  case ExprKind::If:
    out += "(if ";
    print(*e.args[0], out);
    out += " then ";
    print(*e.args[1], out);
    out += " else ";
    print(*e.args[2], out);
    out += ")";
    return;
  case ExprKind::Max:
  case ExprKind::Min:
    out += e.kind == ExprKind::Max ? "max(" : "min(";
    print(*e.args[0], out);
    out += ", ";
    print(*e.args[1], out);
    out += ")";
    return;
  }
}

// ---- tokenizer / parser ---------------------------------------------------

struct Token
{
  enum class Type
  {
    Number,
    Ident,
    String,
    Symbol,
    End
  };
  Type        type = Type::End;
  std::string text;
  std::size_t pos = 0;
};

inline std::vector<Token> tokenize(std::string_view src)
{
  std::vector<Token> out;
  std::size_t        i = 0;
  while (i < src.size())
  {
    unsigned char const c = static_cast<unsigned char>(src[i]);
    if (std::isspace(c))
    {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isdigit(c))
    {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
      {
        ++j;
      }
      if (j + 1 < src.size() && (src[j] == '/' || src[j] == '.') &&
          std::isdigit(static_cast<unsigned char>(src[j + 1])))
      {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
        {
          ++j;
        }
      }
      t.type = Token::Type::Number;
      t.text = std::string(src.substr(i, j - i));
      i      = j;
    }
    else if (std::isalpha(c) || c == '_')
    {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
      {
        ++j;
      }
      t.type = Token::Type::Ident;
      t.text = std::string(src.substr(i, j - i));
      i      = j;
    }
    else if (c == '\'' || c == '"')
    {
      std::size_t const close = src.find(static_cast<char>(c), i + 1);
      if (close == std::string_view::npos)
      {
        throw ExprSyntaxError("unterminated string literal", i);
      }
      t.type = Token::Type::String;
      t.text = std::string(src.substr(i + 1, close - i - 1));
      i      = close + 1;
    }
    else
    {
      static constexpr std::string_view two[] = {"!=", "<=", ">=", "<>"};
      t.type                                  = Token::Type::Symbol;
      std::string_view const rest             = src.substr(i);
      bool                   matched          = false;
      for (auto s : two)
      {
        if (rest.substr(0, 2) == s)
        {
          t.text  = s == "<>" ? "!=" : std::string(s);
          i      += 2;
          matched = true;
          break;
        }
      }
      // UTF-8 forms of the math operators.
      static constexpr std::pair<std::string_view, std::string_view> utf[] = {
          {"\xE2\x89\xA0", "!="}, {"\xE2\x89\xA4", "<="}, {"\xE2\x89\xA5", ">="},
          {"\xC3\x97", "*"},      {"\xE2\x88\x92", "-"}};
      if (!matched)
      {
        for (auto const &[u, ascii] : utf)
        {
          if (rest.substr(0, u.size()) == u)
          {
            t.text  = std::string(ascii);
            i      += u.size();
            matched = true;
            break;
          }
        }
      }
      if (!matched)
      {
        if (std::string_view("+-*()[].,=<>").find(static_cast<char>(c)) == std::string_view::npos)
        {
          throw ExprSyntaxError(std::string("unexpected character '") + static_cast<char>(c) + "'", i);
        }
        t.text = std::string(1, static_cast<char>(c));
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = src.size();
  out.push_back(end);
  return out;
}

class Parser
{
public:
  explicit Parser(std::string_view src)
    : toks_(tokenize(src))
  {}

  ExprPtr parse_all()
  {
    ExprPtr e = expr();
    if (peek().type != Token::Type::End)
    {
      throw ExprSyntaxError("unexpected '" + peek().text + "'", peek().pos);
    }
    return e;
  }

private:
  std::vector<Token> toks_;
  std::size_t        at_ = 0;

  Token const &peek(std::size_t k = 0) const { return toks_[std::min(at_ + k, toks_.size() - 1)]; }
  Token const &next() { return toks_[std::min(at_++, toks_.size() - 1)]; }

  bool is_sym(char const *s, std::size_t k = 0) const
  {
    return peek(k).type == Token::Type::Symbol && peek(k).text == s;
  }
  bool is_kw(char const *s, std::size_t k = 0) const
  {
    return peek(k).type == Token::Type::Ident && peek(k).text == s;
  }
  void expect_sym(char const *s)
  {
    if (!is_sym(s))
    {
      throw ExprSyntaxError(std::string("expected '") + s + "'", peek().pos);
    }
    ++at_;
  }
  void expect_kw(char const *s)
  {
    if (!is_kw(s))
    {
      throw ExprSyntaxError(std::string("expected '") + s + "'", peek().pos);
    }
    ++at_;
  }

  ExprPtr expr()
  {
    if (is_kw("if"))
    {
      ++at_;
      ExprPtr c = expr();
      expect_kw("then");
      ExprPtr a = expr();
      expect_kw("else");
      ExprPtr  b = expr();
      ExprNode n;
      n.kind = ExprKind::If;
      n.args = {c, a, b};
      return make(std::move(n));
    }
    return disjunction();
  }

  ExprPtr disjunction()
  {
    ExprPtr lhs = conjunction();
    while (is_kw("or"))
    {
      ++at_;
      lhs = binary(BinOp::Or, lhs, conjunction());
    }
    return lhs;
  }

  ExprPtr conjunction()
  {
    ExprPtr lhs = negation();
    while (is_kw("and"))
    {
      ++at_;
      lhs = binary(BinOp::And, lhs, negation());
    }
    return lhs;
  }

  ExprPtr negation()
  {
    if (is_kw("not"))
    {
      ++at_;
      ExprNode n;
      n.kind = ExprKind::Not;
      n.args = {negation()};
      return make(std::move(n));
    }
    return comparison();
  }

  ExprPtr comparison()
  {
    ExprPtr lhs = additive();
    static constexpr std::pair<char const *, BinOp> ops[] = {
        {"=", BinOp::Eq}, {"!=", BinOp::Ne}, {"<", BinOp::Lt},
        {"<=", BinOp::Le}, {">", BinOp::Gt}, {">=", BinOp::Ge}};
    for (auto const &[s, op] : ops)
    {
      if (is_sym(s))
      {
        ++at_;
        return binary(op, lhs, additive());
      }
    }
    return lhs;
  }

  ExprPtr additive()
  {
    ExprPtr lhs = multiplicative();
    while (is_sym("+") || is_sym("-"))
    {
      BinOp const op = next().text == "+" ? BinOp::Add : BinOp::Sub;
      lhs            = binary(op, lhs, multiplicative());
    }
    return lhs;
  }

  ExprPtr multiplicative()
  {
    ExprPtr lhs = unary();
    while (is_sym("*"))
    {
      ++at_;
      lhs = binary(BinOp::Mul, lhs, unary());
    }
    return lhs;
  }

  ExprPtr unary()
  {
    if (is_sym("-"))
    {
      ++at_;
      if (is_kw("inf"))
      {
        ++at_;
        ExprNode n;
        n.kind = ExprKind::NegInf;
        return make(std::move(n));
      }
      return negate(unary());
    }
    return primary();
  }

  std::string player_id()
  {
    Token const &t = next();
    if (t.type != Token::Type::Ident && t.type != Token::Type::Number)
    {
      throw ExprSyntaxError("expected player id", t.pos);
    }
    return t.text;
  }

  std::string attr_path()
  {
    Token const &t = next();
    if (t.type != Token::Type::Ident)
    {
      throw ExprSyntaxError("expected attribute name", t.pos);
    }
    std::string path = t.text;
    while (is_sym(".") && peek(1).type == Token::Type::Ident)
    {
      ++at_;
      path += "." + next().text;
    }
    return path;
  }

  ExprPtr primary()
  {
    Token const &t = peek();
    if (t.type == Token::Type::Number)
    {
      ++at_;
      try
      {
        return number(Rat::parse(t.text));
      }
      catch (std::exception const &e)
      {
        throw ExprSyntaxError(e.what(), t.pos);
      }
    }
    if (t.type == Token::Type::String)
    {
      ++at_;
      ExprNode n;
      n.kind = ExprKind::String;
      n.text = t.text;
      return make(std::move(n));
    }
    if (is_sym("("))
    {
      ++at_;
      ExprPtr e = expr();
      expect_sym(")");
      return e;
    }
    if (t.type == Token::Type::Ident)
    {
      if (t.text == "r" && is_sym("[", 1))
      {
        at_ += 2;
        ExprNode n;
        n.kind = ExprKind::ResultRef;
        n.text = player_id();
        expect_sym("]");
        expect_sym(".");
        n.attr = attr_path();
        return make(std::move(n));
      }
      if (t.text == "own" && is_sym(".", 1))
      {
        at_ += 2;
        ExprNode n;
        n.kind = ExprKind::OwnRef;
        n.attr = attr_path();
        return make(std::move(n));
      }
      if (t.text == "present" && is_sym("(", 1))
      {
        at_ += 2;
        ExprNode n;
        n.kind = ExprKind::Present;
        n.text = player_id();
        expect_sym(")");
        return make(std::move(n));
      }
      if ((t.text == "max" || t.text == "min") && is_sym("(", 1))
      {
        bool const is_max = t.text == "max";
        at_ += 2;
        ExprPtr a = expr();
        expect_sym(",");
        ExprPtr b = expr();
        expect_sym(")");
        ExprNode n;
        n.kind = is_max ? ExprKind::Max : ExprKind::Min;
        n.args = {a, b};
        return make(std::move(n));
      }
    }
    throw ExprSyntaxError(t.type == Token::Type::End ? "unexpected end of expression"
                                                     : "unexpected '" + t.text + "'",
                          t.pos);
  }
};

// ---- evaluation -----------------------------------------------------------

using Value = std::variant<ExtReal, std::string, bool>;

inline char const *type_name(Value const &v)
{
  switch (v.index())
  {
  case 0:
    return "number";
  case 1:
    return "string";
  default:
    return "boolean";
  }
}

inline ExtReal as_number(Value const &v)
{
  if (auto const *x = std::get_if<ExtReal>(&v))
  {
    return *x;
  }
  throw EvalError(std::string("expected a number, got a ") + type_name(v));
}

inline bool as_bool(Value const &v)
{
  if (auto const *b = std::get_if<bool>(&v))
  {
    return *b;
  }
  throw EvalError(std::string("expected a boolean, got a ") + type_name(v));
}

inline Value atom_value(Atom const &a)
{
  if (auto const *s = std::get_if<std::string>(&a))
  {
    return *s;
  }
  return ExtReal(std::get<Rat>(a));
}

inline Value eval(ExprNode const &e, EvalContext const &ctx)
{
  switch (e.kind)
  {
  case ExprKind::Number:
    return ExtReal(e.number);
  case ExprKind::NegInf:
    return ExtReal::neg_inf();
  case ExprKind::String:
    return e.text;
  case ExprKind::Present:
    return ctx.results != nullptr && ctx.results->count(e.text) > 0;
  case ExprKind::ResultRef:
  {
    if (ctx.results == nullptr || ctx.results->count(e.text) == 0)
    {
      throw EvalError("player '" + e.text + "' is not present; guard with present(" + e.text + ")");
    }
    auto const it = ctx.results->find(e.text);
    Atom const *a = it->second->find(e.attr);
    if (a == nullptr)
    {
      throw EvalError("result of player '" + e.text + "' has no attribute '" + e.attr + "'");
    }
    return atom_value(*a);
  }
  case ExprKind::OwnRef:
  {
    if (e.attr == "cost")
    {
      return ExtReal(ctx.own_cost);
    }
    Atom const *a = ctx.own_result == nullptr ? nullptr : ctx.own_result->find(e.attr);
    if (a == nullptr)
    {
      throw EvalError("own result has no attribute '" + e.attr + "'");
    }
    return atom_value(*a);
  }
  case ExprKind::Neg:
    return -as_number(eval(*e.args[0], ctx));
  case ExprKind::Not:
    return !as_bool(eval(*e.args[0], ctx));
  case ExprKind::If:
    return as_bool(eval(*e.args[0], ctx)) ? eval(*e.args[1], ctx) : eval(*e.args[2], ctx);
  case ExprKind::Max:
    return max(as_number(eval(*e.args[0], ctx)), as_number(eval(*e.args[1], ctx)));
  case ExprKind::Min:
    return min(as_number(eval(*e.args[0], ctx)), as_number(eval(*e.args[1], ctx)));
  case ExprKind::Binary:
    break;
  }

  switch (e.op)
  {
  case BinOp::And:
    return as_bool(eval(*e.args[0], ctx)) && as_bool(eval(*e.args[1], ctx));
  case BinOp::Or:
    return as_bool(eval(*e.args[0], ctx)) || as_bool(eval(*e.args[1], ctx));
  default:
    break;
  }

  Value const a = eval(*e.args[0], ctx);
  Value const b = eval(*e.args[1], ctx);
  switch (e.op)
  {
  case BinOp::Add:
    return as_number(a) + as_number(b);
  case BinOp::Sub:
    return as_number(a) - as_number(b);
  case BinOp::Mul:
    return as_number(a) * as_number(b);
  case BinOp::Eq:
  case BinOp::Ne:
  {
    if (a.index() != b.index())
    {
      throw EvalError(std::string("cannot compare a ") + type_name(a) + " with a " + type_name(b));
    }
    bool const eq = a == b;
    return e.op == BinOp::Eq ? eq : !eq;
  }
  case BinOp::Lt:
    return as_number(a) < as_number(b);
  case BinOp::Le:
    return as_number(a) <= as_number(b);
  case BinOp::Gt:
    return as_number(a) > as_number(b);
  case BinOp::Ge:
    return as_number(a) >= as_number(b);
  default:
    throw EvalError("unreachable operator");
  }
}

inline void collect_players(ExprNode const &e, std::set<std::string> &out)
{
  if (e.kind == ExprKind::ResultRef || e.kind == ExprKind::Present)
  {
    out.insert(e.text);
  }
  for (auto const &a : e.args)
  {
    collect_players(*a, out);
  }
}

}  // namespace detail

/// Immutable utility function over an endstate: own leaf plus the results of
/// the participating players.
class UtilityExpr
{
public:
  /// The default agent utility: minus the cost of the achieved leaf.
  UtilityExpr()
    : UtilityExpr(parse("-own.cost"))
  {}

  static UtilityExpr parse(std::string_view text)
  {
    return UtilityExpr(detail::Parser(text).parse_all());
  }

  static UtilityExpr constant(Rat v) { return UtilityExpr(detail::number(v)); }

  /// Canonical, fully parenthesized text; parse(str()) reproduces the tree.
  std::string str() const
  {
    std::string out;
    detail::print(*root_, out);
    return out;
  }

  ExtReal evaluate(EvalContext const &ctx) const
  {
    detail::Value v = detail::eval(*root_, ctx);
    if (auto const *x = std::get_if<ExtReal>(&v))
    {
      return *x;
    }
    throw EvalError(std::string("utility evaluated to a ") + detail::type_name(v) + ", not a number");
  }

  /// this + x. Folds into an existing trailing constant so that
  /// plus(x).plus(-x) is structurally the original expression.
  UtilityExpr plus(Rat const &x) const
  {
    using detail::BinOp;
    using detail::ExprKind;
    if (root_->kind == ExprKind::Binary && root_->op == BinOp::Add &&
        root_->args[1]->kind == ExprKind::Number)
    {
      Rat const c = root_->args[1]->number + x;
      if (c.is_zero())
      {
        return UtilityExpr(root_->args[0]);
      }
      return UtilityExpr(detail::binary(BinOp::Add, root_->args[0], detail::number(c)));
    }
    if (x.is_zero())
    {
      return *this;
    }
    return UtilityExpr(detail::binary(BinOp::Add, root_, detail::number(x)));
  }

  UtilityExpr operator+(UtilityExpr const &o) const
  {
    return UtilityExpr(detail::binary(detail::BinOp::Add, root_, o.root_));
  }

  std::set<std::string> referenced_players() const
  {
    std::set<std::string> out;
    detail::collect_players(*root_, out);
    return out;
  }

  detail::ExprNode const &root() const { return *root_; }
  detail::ExprPtr const  &root_ptr() const { return root_; }

  explicit UtilityExpr(detail::ExprPtr root)
    : root_(std::move(root))
  {}

  friend bool operator==(UtilityExpr const &a, UtilityExpr const &b)
  {
    return a.root_ == b.root_ || a.str() == b.str();
  }
  friend bool operator!=(UtilityExpr const &a, UtilityExpr const &b) { return !(a == b); }

private:
  detail::ExprPtr root_;
};

}  // namespace stochmech
