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

#include <ostream>
#include <stdexcept>
#include <string>

namespace stochmech {

/// Extended rational: finite value or -inf / +inf.
///
/// -inf encodes forbidden overall executions and the payment on a result
/// mismatch. +inf only appears as the negation of those (e.g. the principal's
/// side of an infinite fine). Adding opposite infinities throws.
class ExtReal
{
public:
  enum class Kind : int
  {
    NegInf = -1,
    Finite = 0,
    PosInf = 1
  };

  ExtReal() = default;
  ExtReal(Rat v)  // NOLINT(google-explicit-constructor)
    : value_(v)
  {}
  ExtReal(std::int64_t v)  // NOLINT(google-explicit-constructor)
    : value_(v)
  {}

  static ExtReal neg_inf() { return ExtReal(Kind::NegInf); }
  static ExtReal pos_inf() { return ExtReal(Kind::PosInf); }

  Kind kind() const { return kind_; }
  bool finite() const { return kind_ == Kind::Finite; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }

  /// Finite value; throws on an infinity.
  Rat const &value() const
  {
    if (!finite())
    {
      throw std::domain_error("expected a finite value, got " + str());
    }
    return value_;
  }

  std::string str() const
  {
    switch (kind_)
    {
    case Kind::NegInf:
      return "-inf";
    case Kind::PosInf:
      return "inf";
    default:
      return value_.str();
    }
  }

  ExtReal operator-() const
  {
    if (!finite())
    {
      return ExtReal(kind_ == Kind::NegInf ? Kind::PosInf : Kind::NegInf);
    }
    return ExtReal(-value_);
  }

  friend ExtReal operator+(ExtReal const &a, ExtReal const &b)
  {
    if (a.finite() && b.finite())
    {
      return ExtReal(a.value_ + b.value_);
    }
    if (!a.finite() && !b.finite() && a.kind_ != b.kind_)
    {
      throw std::domain_error("indeterminate sum of opposite infinities");
    }
    return ExtReal(a.finite() ? b.kind_ : a.kind_);
  }
  friend ExtReal operator-(ExtReal const &a, ExtReal const &b) { return a + (-b); }

  friend ExtReal operator*(ExtReal const &a, ExtReal const &b)
  {
    if (a.finite() && b.finite())
    {
      return ExtReal(a.value_ * b.value_);
    }
    int const sa = a.signum();
    int const sb = b.signum();
    if (sa == 0 || sb == 0)
    {
      throw std::domain_error("indeterminate product of zero and infinity");
    }
    return ExtReal(sa * sb > 0 ? Kind::PosInf : Kind::NegInf);
  }

  ExtReal &operator+=(ExtReal const &o) { return *this = *this + o; }
  ExtReal &operator-=(ExtReal const &o) { return *this = *this - o; }

  friend bool operator==(ExtReal const &a, ExtReal const &b)
  {
    return a.kind_ == b.kind_ && (!a.finite() || a.value_ == b.value_);
  }
  friend bool operator!=(ExtReal const &a, ExtReal const &b) { return !(a == b); }
  friend bool operator<(ExtReal const &a, ExtReal const &b)
  {
    if (a.kind_ != b.kind_)
    {
      return static_cast<int>(a.kind_) < static_cast<int>(b.kind_);
    }
    return a.finite() && a.value_ < b.value_;
  }
  friend bool operator>(ExtReal const &a, ExtReal const &b) { return b < a; }
  friend bool operator<=(ExtReal const &a, ExtReal const &b) { return !(b < a); }
  friend bool operator>=(ExtReal const &a, ExtReal const &b) { return !(a < b); }

  friend std::ostream &operator<<(std::ostream &os, ExtReal const &x) { return os << x.str(); }

  int signum() const
  {
    switch (kind_)
    {
    case Kind::NegInf:
      return -1;
    case Kind::PosInf:
      return 1;
    default:
      return value_.sign();
    }
  }

private:
  explicit ExtReal(Kind k)
    : kind_(k)
  {}

  Kind kind_ = Kind::Finite;
  Rat  value_;
};

inline ExtReal max(ExtReal const &a, ExtReal const &b)
{
  return a < b ? b : a;
}

inline ExtReal min(ExtReal const &a, ExtReal const &b)
{
  return b < a ? b : a;
}

}  // namespace stochmech
