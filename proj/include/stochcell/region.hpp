#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochcell {

// Tolerance for stochasticity validation (column sums, probability vectors).
inline constexpr double kStochasticTol = 1e-9;
// Tolerance for algebraic identities on exactly representable inputs.
inline constexpr double kExactTol = 1e-12;

// Symbol alphabet with a distinguished quiescent symbol.
struct Alphabet {
  int size = 2;
  int quiescent = 0;

  Alphabet() = default;
  explicit Alphabet(int size_, int quiescent_ = 0) : size(size_), quiescent(quiescent_) {
    if (size < 1) throw std::invalid_argument("Alphabet: size must be >= 1");
    if (quiescent < 0 || quiescent >= size)
      throw std::invalid_argument("Alphabet: quiescent symbol out of range");
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;
};

// An ordered finite set of integer cell labels; each cell carries a wire
// dimension. Cells and hidden wires may have different dimensions, so the
// dimension list is per cell rather than a single alphabet size.
class Region {
 public:
  Region() = default;

  Region(std::vector<int> cells, std::vector<int> dims)
      : cells_(std::move(cells)), dims_(std::move(dims)) {
    if (cells_.size() != dims_.size())
      throw std::invalid_argument("Region: cells/dims length mismatch");
    for (std::size_t i = 0; i + 1 < cells_.size(); ++i)
      if (cells_[i] >= cells_[i + 1])
        throw std::invalid_argument("Region: labels must be strictly increasing");
    for (int d : dims_)
      if (d < 1) throw std::invalid_argument("Region: wire dimensions must be >= 1");
  }

  static Region uniform(std::vector<int> cells, int dim) {
    std::vector<int> dims(cells.size(), dim);
    return Region(std::move(cells), std::move(dims));
  }

  // Cells first, first+1, ..., first+count-1, all with the same dimension.
  static Region interval(int first, int count, int dim) {
    if (count < 0) throw std::invalid_argument("Region::interval: negative count");
    std::vector<int> cells(count);
    for (int i = 0; i < count; ++i) cells[i] = first + i;
    return uniform(std::move(cells), dim);
  }

  int cell_count() const { return static_cast<int>(cells_.size()); }
  bool empty() const { return cells_.empty(); }
  const std::vector<int>& cells() const { return cells_; }
  const std::vector<int>& dims() const { return dims_; }
  int dim_at(int pos) const { return dims_.at(pos); }

  // Number of words over this region (1 for the empty region).
  std::int64_t word_count() const {
    std::int64_t n = 1;
    for (int d : dims_) {
      n *= d;
      if (n < 0 || n > (std::int64_t{1} << 40))
        throw std::invalid_argument("Region: word count overflow");
    }
    return n;
  }

  std::optional<int> position_of(int label) const {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), label);
    if (it == cells_.end() || *it != label) return std::nullopt;
    return static_cast<int>(it - cells_.begin());
  }

  bool contains_label(int label) const { return position_of(label).has_value(); }

  int dim_of_label(int label) const {
    auto p = position_of(label);
    if (!p) throw std::invalid_argument("Region: label not present");
    return dims_[*p];
  }

  // True when every cell of `sub` appears here with the same dimension.
  bool subsumes(const Region& sub) const {
    for (int k = 0; k < sub.cell_count(); ++k) {
      auto p = position_of(sub.cells_[k]);
      if (!p || dims_[*p] != sub.dims_[k]) return false;
    }
    return true;
  }

  bool disjoint_from(const Region& other) const {
    for (int c : other.cells_)
      if (contains_label(c)) return false;
    return true;
  }

  // Sorted union of two disjoint regions.
  Region united(const Region& other) const {
    if (!disjoint_from(other))
      throw std::invalid_argument("Region: union of overlapping regions");
    std::vector<int> cells, dims;
    cells.reserve(cells_.size() + other.cells_.size());
    dims.reserve(cells.capacity());
    std::size_t i = 0, j = 0;
    while (i < cells_.size() || j < other.cells_.size()) {
      bool take_left = j >= other.cells_.size() ||
                       (i < cells_.size() && cells_[i] < other.cells_[j]);
      if (take_left) {
        cells.push_back(cells_[i]);
        dims.push_back(dims_[i]);
        ++i;
      } else {
        cells.push_back(other.cells_[j]);
        dims.push_back(other.dims_[j]);
        ++j;
      }
    }
    return Region(std::move(cells), std::move(dims));
  }

  // This region with the cells of `sub` removed; `sub` must be a subregion.
  Region without(const Region& sub) const {
    if (!subsumes(sub)) throw std::invalid_argument("Region: not a subregion");
    std::vector<int> cells, dims;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (!sub.contains_label(cells_[i])) {
        cells.push_back(cells_[i]);
        dims.push_back(dims_[i]);
      }
    }
    return Region(std::move(cells), std::move(dims));
  }

  // Subregion picked out by a list of labels (all must be present).
  Region restricted_to(const std::vector<int>& labels) const {
    std::vector<int> cells, dims;
    for (int c : labels) {
      auto p = position_of(c);
      if (!p) throw std::invalid_argument("Region: label not present");
      cells.push_back(c);
      dims.push_back(dims_[*p]);
    }
    std::vector<std::size_t> order(cells.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cells[a] < cells[b]; });
    std::vector<int> c2, d2;
    for (auto k : order) {
      c2.push_back(cells[k]);
      d2.push_back(dims[k]);
    }
    return Region(std::move(c2), std::move(d2));
  }

  friend bool operator==(const Region&, const Region&) = default;

 private:
  std::vector<int> cells_;
  std::vector<int> dims_;
};

// A word assigns a symbol to every cell of a region, aligned by position.
using Word = std::vector<int>;

inline void validate_word(const Region& r, const Word& w) {
  if (static_cast<int>(w.size()) != r.cell_count())
    throw std::invalid_argument("Word: length does not match region");
  for (int p = 0; p < r.cell_count(); ++p)
    if (w[p] < 0 || w[p] >= r.dim_at(p))
      throw std::invalid_argument("Word: symbol out of range at cell " +
                                  std::to_string(r.cells()[p]));
}

// Lexicographic index of a word: the smallest cell label is the most
// significant digit, mixed radix over per-cell dimensions.
inline std::int64_t word_index(const Region& r, const Word& w) {
  validate_word(r, w);
  std::int64_t idx = 0;
  for (int p = 0; p < r.cell_count(); ++p) idx = idx * r.dim_at(p) + w[p];
  return idx;
}

inline Word word_at(const Region& r, std::int64_t index) {
  if (index < 0 || index >= r.word_count())
    throw std::invalid_argument("word_at: index out of range");
  Word w(r.cell_count());
  for (int p = r.cell_count() - 1; p >= 0; --p) {
    w[p] = static_cast<int>(index % r.dim_at(p));
    index /= r.dim_at(p);
  }
  return w;
}

// Restriction of a word on `r` to the subregion `sub`.
inline Word subword(const Region& r, const Word& w, const Region& sub) {
  Word out(sub.cell_count());
  for (int k = 0; k < sub.cell_count(); ++k) {
    auto p = r.position_of(sub.cells()[k]);
    if (!p) throw std::invalid_argument("subword: not a subregion");
    out[k] = w[*p];
  }
  return out;
}

// Per-position contribution of a word over `super` to the index of its
// restriction to `sub` (zero for positions outside `sub`).
inline std::vector<std::int64_t> sub_strides(const Region& super, const Region& sub) {
  if (!super.subsumes(sub)) throw std::invalid_argument("sub_strides: not a subregion");
  std::vector<std::int64_t> strides(super.cell_count(), 0);
  std::int64_t acc = 1;
  for (int k = sub.cell_count() - 1; k >= 0; --k) {
    int pos = *super.position_of(sub.cells()[k]);
    strides[pos] = acc;
    acc *= sub.dim_at(k);
  }
  return strides;
}

// Odometer loop over all words of a region in index order.
template <class F>
void for_each_word(const Region& r, F&& fn) {
  Word w(r.cell_count(), 0);
  const std::int64_t n = r.word_count();
  for (std::int64_t idx = 0; idx < n; ++idx) {
    fn(static_cast<const Word&>(w), idx);
    for (int p = r.cell_count() - 1; p >= 0; --p) {
      if (++w[p] < r.dim_at(p)) break;
      w[p] = 0;
    }
  }
}

// For every word index over `super`, the index of its restriction to `sub`.
inline std::vector<std::int64_t> index_map(const Region& super, const Region& sub) {
  auto strides = sub_strides(super, sub);
  std::vector<std::int64_t> map(static_cast<std::size_t>(super.word_count()));
  for_each_word(super, [&](const Word& w, std::int64_t idx) {
    std::int64_t s = 0;
    for (std::size_t p = 0; p < w.size(); ++p) s += strides[p] * w[p];
    map[static_cast<std::size_t>(idx)] = s;
  });
  return map;
}

inline std::string format_word(const Word& w) {
  std::string s;
  bool digits = true;
  for (int v : w)
    if (v > 9) digits = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!digits && i) s += ',';
    s += std::to_string(w[i]);
  }
  return s;
}

// Parses a word written as a digit string, e.g. "0110" (dims <= 10 only).
inline Word parse_word(const Region& r, const std::string& s) {
  if (static_cast<int>(s.size()) != r.cell_count())
    throw std::invalid_argument("parse_word: length does not match region");
  Word w(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("parse_word: not a digit");
    w[i] = s[i] - '0';
  }
  validate_word(r, w);
  return w;
}

}  // namespace stochcell
