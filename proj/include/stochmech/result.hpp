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

#include <map>
#include <string>
#include <variant>

namespace stochmech {

/// One certifiable attribute value of a result: a string tag or a rational.
using Atom = std::variant<std::string, Rat>;

inline std::string atom_str(Atom const &a)
{
  if (auto const *s = std::get_if<std::string>(&a))
  {
    return *s;
  }
  return std::get<Rat>(a).str();
}

/// Certifiable outcome of one task: attribute name -> atom.
struct ResultLabel
{
  std::map<std::string, Atom> atoms;

  Atom const *find(std::string const &name) const
  {
    auto it = atoms.find(name);
    return it == atoms.end() ? nullptr : &it->second;
  }

  std::string str() const
  {
    std::string out = "{";
    bool        first = true;
    for (auto const &[k, v] : atoms)
    {
      out += (first ? "" : ", ") + k + ": " + atom_str(v);
      first = false;
    }
    return out + "}";
  }

  friend bool operator==(ResultLabel const &a, ResultLabel const &b) { return a.atoms == b.atoms; }
  friend bool operator!=(ResultLabel const &a, ResultLabel const &b) { return !(a == b); }
};

}  // namespace stochmech
