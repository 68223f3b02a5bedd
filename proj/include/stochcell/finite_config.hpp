#pragma once

#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "stochcell/region.hpp"

namespace stochcell {

// A configuration of the full line that is quiescent outside a finite set of
// cells; only the non-quiescent cells are stored.
struct FiniteConfig {
  Alphabet alphabet;
  std::map<int, int> support;  // label -> non-quiescent symbol

  FiniteConfig() = default;
  FiniteConfig(Alphabet a, std::map<int, int> sup) : alphabet(a), support(std::move(sup)) {
    for (auto& [label, sym] : support) {
      if (sym < 0 || sym >= alphabet.size)
        throw std::invalid_argument("FiniteConfig: symbol out of range at cell " +
                                    std::to_string(label));
      if (sym == alphabet.quiescent)
        throw std::invalid_argument("FiniteConfig: stored symbol equals quiescent at cell " +
                                    std::to_string(label));
    }
  }

  int at(int label) const {
    auto it = support.find(label);
    return it == support.end() ? alphabet.quiescent : it->second;
  }

  friend bool operator==(const FiniteConfig&, const FiniteConfig&) = default;
};

// 0 when equal, otherwise 1/2^k where k is the least radius at which the two
// configurations disagree.
inline double config_distance(const FiniteConfig& c, const FiniteConfig& d) {
  if (c.alphabet != d.alphabet) throw std::invalid_argument("config_distance: alphabet mismatch");
  bool differ = false;
  int k = 0;
  auto visit = [&](int label, int sym, const FiniteConfig& other) {
    if (sym != other.at(label)) {
      int radius = std::abs(label);
      if (!differ || radius < k) k = radius;
      differ = true;
    }
  };
  for (auto& [label, sym] : c.support) visit(label, sym, d);
  for (auto& [label, sym] : d.support) visit(label, sym, c);
  if (!differ) return 0.0;
  return std::ldexp(1.0, -k);
}

}  // namespace stochcell
