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

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stochmech {

/// Exact rational number in canonical form (den > 0, gcd(|num|, den) = 1).
///
/// Backed by 64-bit integers with 128-bit intermediates; any result that
/// does not fit throws std::overflow_error rather than wrapping.
class Rat
{
public:
  constexpr Rat() = default;
  Rat(std::int64_t n)  // NOLINT(google-explicit-constructor)
    : num_(n)
  {}
  Rat(std::int64_t n, std::int64_t d)
  {
    if (d == 0)
    {
      throw std::domain_error("rational with zero denominator");
    }
    assign(n, d);
  }

  /// Accepts "p/q", "p", or a finite decimal such as "-101.99".
  static Rat parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  int  sign() const { return (num_ > 0) - (num_ < 0); }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// "p/q", or "p" when the denominator is 1.
  std::string str() const
  {
    if (den_ == 1)
    {
      return std::to_string(num_);
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Exact decimal expansion when the denominator is of the form 2^a 5^b.
  std::optional<std::string> decimal() const;

  Rat operator-() const
  {
    if (num_ == INT64_MIN)
    {
      throw std::overflow_error("rational negation overflow");
    }
    Rat r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }

  friend Rat operator+(Rat const &a, Rat const &b)
  {
    using I = __int128;
    I const g = std::gcd(a.den_, b.den_);
    I const n = static_cast<I>(a.num_) * (b.den_ / g) + static_cast<I>(b.num_) * (a.den_ / g);
    I const d = static_cast<I>(a.den_ / g) * b.den_;
    return from_wide(n, d);
  }
  friend Rat operator-(Rat const &a, Rat const &b) { return a + (-b); }
  friend Rat operator*(Rat const &a, Rat const &b)
  {
    using I = __int128;
    return from_wide(static_cast<I>(a.num_) * b.num_, static_cast<I>(a.den_) * b.den_);
  }
  friend Rat operator/(Rat const &a, Rat const &b)
  {
    if (b.num_ == 0)
    {
      throw std::domain_error("rational division by zero");
    }
    using I = __int128;
    return from_wide(static_cast<I>(a.num_) * b.den_, static_cast<I>(a.den_) * b.num_);
  }

  Rat &operator+=(Rat const &o) { return *this = *this + o; }
  Rat &operator-=(Rat const &o) { return *this = *this - o; }
  Rat &operator*=(Rat const &o) { return *this = *this * o; }
  Rat &operator/=(Rat const &o) { return *this = *this / o; }

  friend bool operator==(Rat const &a, Rat const &b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend bool operator!=(Rat const &a, Rat const &b) { return !(a == b); }
  friend bool operator<(Rat const &a, Rat const &b)
  {
    using I = __int128;
    return static_cast<I>(a.num_) * b.den_ < static_cast<I>(b.num_) * a.den_;
  }
  friend bool operator>(Rat const &a, Rat const &b) { return b < a; }
  friend bool operator<=(Rat const &a, Rat const &b) { return !(b < a); }
  friend bool operator>=(Rat const &a, Rat const &b) { return !(a < b); }

  friend std::ostream &operator<<(std::ostream &os, Rat const &r) { return os << r.str(); }

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;

  static __int128 wide_gcd(__int128 a, __int128 b)
  {
    if (a < 0)
    {
      a = -a;
    }
    if (b < 0)
    {
      b = -b;
    }
    while (b != 0)
    {
      __int128 t = a % b;
      a          = b;
      b          = t;
    }
    return a;
  }

  static Rat from_wide(__int128 n, __int128 d)
  {
    if (d < 0)
    {
      n = -n;
      d = -d;
    }
    __int128 const g = wide_gcd(n, d);
    if (g > 1)
    {
      n /= g;
      d /= g;
    }
    if (n > INT64_MAX || n < -INT64_MAX || d > INT64_MAX)
    {
      throw std::overflow_error("rational arithmetic overflow");
    }
    Rat r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  void assign(std::int64_t n, std::int64_t d)
  {
    *this = from_wide(n, d);
  }
};

inline Rat Rat::parse(std::string_view text)
{
  auto fail = [&]() -> Rat {
    throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
  };
  auto parse_int = [&](std::string_view s, bool allow_sign) -> __int128 {
    bool neg = false;
    if (allow_sign && !s.empty() && (s.front() == '-' || s.front() == '+'))
    {
      neg = s.front() == '-';
      s.remove_prefix(1);
    }
    if (s.empty() || s.size() > 18)
    {
      fail();
    }
    __int128 v = 0;
    for (char c : s)
    {
      if (c < '0' || c > '9')
      {
        fail();
      }
      v = v * 10 + (c - '0');
    }
    return neg ? -v : v;
  };

  auto const slash = text.find('/');
  if (slash != std::string_view::npos)
  {
    __int128 const n = parse_int(text.substr(0, slash), true);
    __int128 const d = parse_int(text.substr(slash + 1), false);
    if (d == 0)
    {
      throw std::domain_error("rational with zero denominator");
    }
    return from_wide(n, d);
  }
  auto const dot = text.find('.');
  if (dot != std::string_view::npos)
  {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac  = text.substr(dot + 1);
    bool const       neg   = !whole.empty() && whole.front() == '-';
    if (!whole.empty() && (whole.front() == '-' || whole.front() == '+'))
    {
      whole.remove_prefix(1);
    }
    if (whole.empty())
    {
      whole = "0";
    }
    __int128 const w = parse_int(whole, false);
    __int128 const f = parse_int(frac, false);
    __int128       scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k)
    {
      scale *= 10;
    }
    __int128 const n = w * scale + f;
    return from_wide(neg ? -n : n, scale);
  }
  return from_wide(parse_int(text, true), 1);
}

inline std::optional<std::string> Rat::decimal() const
{
  std::int64_t d      = den_;
  int          twos   = 0;
  int          fives  = 0;
  while (d % 2 == 0)
  {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0)
  {
    d /= 5;
    ++fives;
  }
  if (d != 1)
  {
    return std::nullopt;
  }
  int const digits = std::max(twos, fives);
  // num/den = num * (10^digits / den) / 10^digits
  __int128 scale = 1;
  for (int k = 0; k < digits; ++k)
  {
    scale *= 10;
  }
  __int128 scaled = static_cast<__int128>(num_) * (scale / den_);
  bool const neg  = scaled < 0;
  if (neg)
  {
    scaled = -scaled;
  }
  __int128 const whole = scaled / scale;
  __int128       frac  = scaled % scale;

  auto to_str = [](__int128 v) {
    if (v == 0)
    {
      return std::string("0");
    }
    std::string s;
    while (v > 0)
    {
      s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    return s;
  };

  std::string out = (neg ? "-" : "") + to_str(whole);
  if (digits > 0)
  {
    std::string f = to_str(frac);
    f.insert(f.begin(), static_cast<std::size_t>(digits) - f.size(), '0');
    out += "." + f;
  }
  return out;
}

inline Rat abs(Rat const &r)
{
  return r.sign() < 0 ? -r : r;
}

}  // namespace stochmech

template <>
struct std::hash<stochmech::Rat>
{
  std::size_t operator()(stochmech::Rat const &r) const noexcept
  {
    std::size_t h = std::hash<std::int64_t>{}(r.num());
    return h ^ (std::hash<std::int64_t>{}(r.den()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};
