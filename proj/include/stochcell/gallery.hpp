#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochcell/stoch_map.hpp"

namespace stochcell::gallery {

namespace detail {

inline int parity_of(const Word& w) {
  int p = 0;
  for (int v : w) p ^= (v & 1);
  return p;
}

// Distribution over n-bit words that is uniform on the words of the given
// parity: the unique distribution supported on one parity class whose strict
// subset marginals are all uniform.
inline Eigen::VectorXd parity_uniform(int n, int parity) {
  const Region r = Region::interval(1, n, 2);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(r.word_count());
  const double p = 1.0 / static_cast<double>(r.word_count() / 2);
  for_each_word(r, [&](const Word& w, std::int64_t idx) {
    if (parity_of(w) == parity) v[idx] = p;
  });
  return v;
}

}  // namespace detail

// n binary cells, inputs ignored; outputs are uniform over the even-parity
// words, so every strict subset of outputs looks uniform while the global
// parity is pinned to 0.
inline StochMap parity(int n) {
  if (n < 2) throw std::invalid_argument("parity: need at least 2 cells");
  const Region cells = Region::interval(1, n, 2);
  return constant_map(cells, State(cells, detail::parity_uniform(n, 0)));
}

// Inputs ignored; the outermost output cells show one shared fair coin while
// the interior cells output 0 deterministically. Outputs 1 and n are each
// uniform yet always equal.
inline StochMap magic_coins(int n) {
  if (n < 2) throw std::invalid_argument("magic_coins: need at least 2 cells");
  const Region cells = Region::interval(1, n, 2);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cells.word_count());
  Word zero(n, 0), ones_at_ends(n, 0);
  ones_at_ends.front() = ones_at_ends.back() = 1;
  v[word_index(cells, zero)] = 0.5;
  v[word_index(cells, ones_at_ends)] = 0.5;
  return constant_map(cells, State(cells, std::move(v)));
}

// n binary cells; the first input is a, the last is b, interior inputs are
// ignored; the output is uniform over the words of parity a*b.
inline StochMap gen_nlbox(int n) {
  if (n < 2) throw std::invalid_argument("gen_nlbox: need at least 2 cells");
  const Region cells = Region::interval(1, n, 2);
  Eigen::MatrixXd m(cells.word_count(), cells.word_count());
  for_each_word(cells, [&](const Word& in, std::int64_t c) {
    m.col(c) = detail::parity_uniform(n, in.front() & in.back());
  });
  return StochMap(cells, cells, std::move(m));
}

// The two-party box: binary inputs (a,b), outputs uniform with parity a*b.
inline StochMap nlbox() { return gen_nlbox(2); }

// Mixture box: with probability 1/2^k the output parity is a*b, otherwise 0;
// strict subset marginals stay uniform for every input.
inline StochMap vk_box(int k, int n) {
  if (k < 1) throw std::invalid_argument("vk_box: depth must be >= 1");
  if (n < 2) throw std::invalid_argument("vk_box: need at least 2 cells");
  const Region cells = Region::interval(1, n, 2);
  const double w = std::ldexp(1.0, -k);
  Eigen::MatrixXd m(cells.word_count(), cells.word_count());
  for_each_word(cells, [&](const Word& in, std::int64_t c) {
    m.col(c) = w * detail::parity_uniform(n, in.front() & in.back()) +
               (1.0 - w) * detail::parity_uniform(n, 0);
  });
  return StochMap(cells, cells, std::move(m));
}

// Output parity is a*b or 0 with equal probability: the depth-1 mixture box.
inline StochMap vbox(int n) { return vk_box(1, n); }

// Embeds a binary-cell map into a wider ternary array with quiescent symbol
// q = 0 (binary symbols shift to 1 and 2). On inputs whose restriction to the
// window is entirely non-quiescent the embedded map acts there and the rest
// passes through unchanged; every other input passes through as a whole.
// Columns stay stochastic by construction. The embedding applies the map in
// one fixed window; it does not tile the line.
inline StochMap quiescent_embed(const StochMap& s, int width, int offset) {
  if (s.in_region() != s.out_region())
    throw std::invalid_argument("quiescent_embed: map must be an endomap of its window");
  for (int d : s.in_region().dims())
    if (d != 2) throw std::invalid_argument("quiescent_embed: map must be over binary cells");
  const int m = s.in_region().cell_count();
  if (offset < 0 || width < m + offset)
    throw std::invalid_argument("quiescent_embed: window does not fit the width");

  const Region cells = Region::interval(1, width, 3);
  const Region window = Region::interval(1 + offset, m, 3);
  const Region window_bits = Region::interval(1 + offset, m, 2);
  auto win_of = index_map(cells, window);
  auto rest_of = index_map(cells, cells.without(window));

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(cells.word_count(), cells.word_count());
  for_each_word(cells, [&](const Word& in, std::int64_t c) {
    Word wv = subword(cells, in, window);
    bool active = true;
    for (int v : wv) active = active && v != 0;
    if (!active) {
      g(c, c) = 1.0;
      return;
    }
    Word bits(wv);
    for (int& v : bits) --v;
    const std::int64_t col_s = word_index(window_bits, bits);
    for_each_word(cells, [&](const Word& out, std::int64_t r) {
      if (rest_of[r] != rest_of[c]) return;
      Word ov = subword(cells, out, window);
      for (int v : ov)
        if (v == 0) return;
      Word obits(ov);
      for (int& v : obits) --v;
      g(r, c) = s.at(word_index(window_bits, obits), col_s);
    });
  });
  return StochMap(cells, cells, std::move(g));
}

enum class MapName { parity, magic_coins, nlbox, gen_nlbox, vbox, vk_box };

inline const char* to_string(MapName m) {
  switch (m) {
    case MapName::parity: return "parity";
    case MapName::magic_coins: return "magiccoins";
    case MapName::nlbox: return "nlbox";
    case MapName::gen_nlbox: return "gennlbox";
    case MapName::vbox: return "vbox";
    case MapName::vk_box: return "vkbox";
  }
  return "?";
}

inline std::optional<MapName> map_name_from(const std::string& s) {
  for (MapName m : {MapName::parity, MapName::magic_coins, MapName::nlbox, MapName::gen_nlbox,
                    MapName::vbox, MapName::vk_box})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct GalleryMap {
  MapName name{};
  int n = 0;
  int k = 0;  // chain depth, vk_box only
  StochMap map;
};

inline GalleryMap make(MapName name, int n = 2, int k = 1) {
  switch (name) {
    case MapName::parity: return {name, n, 0, parity(n)};
    case MapName::magic_coins: return {name, n, 0, magic_coins(n)};
    case MapName::nlbox: return {name, 2, 0, nlbox()};
    case MapName::gen_nlbox: return {name, n, 0, gen_nlbox(n)};
    case MapName::vbox: return {name, n, 0, vbox(n)};
    case MapName::vk_box: return {name, n, k, vk_box(k, n)};
  }
  throw std::invalid_argument("gallery::make: unknown map");
}

struct GalleryEntry {
  MapName name;
  const char* params;
};

inline std::vector<GalleryEntry> list_entries() {
  return {
      {MapName::parity, "n >= 2"},
      {MapName::magic_coins, "n >= 2"},
      {MapName::nlbox, "(none)"},
      {MapName::gen_nlbox, "n >= 2"},
      {MapName::vbox, "n >= 2"},
      {MapName::vk_box, "n >= 2, k >= 1"},
  };
}

}  // namespace stochcell::gallery
