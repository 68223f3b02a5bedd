#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stochcell/circuit.hpp"
#include "stochcell/factor_product.hpp"
#include "stochcell/factor_search.hpp"
#include "stochcell/stoch_map.hpp"

namespace stochcell::causality {

enum class CausalProperty {
  non_signalling,
  non_correlating,
  screening_off,
  v_causal,
  shape_factorization,
};

enum class VerdictStatus { proved, refuted, search_exhausted };

inline const char* to_string(CausalProperty p) {
  switch (p) {
    case CausalProperty::non_signalling: return "non-signalling";
    case CausalProperty::non_correlating: return "non-correlating";
    case CausalProperty::screening_off: return "screening-off";
    case CausalProperty::v_causal: return "v-causal";
    case CausalProperty::shape_factorization: return "shape-factorization";
  }
  return "?";
}

inline const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::proved: return "proved";
    case VerdictStatus::refuted: return "refuted";
    case VerdictStatus::search_exhausted: return "search-exhausted";
  }
  return "?";
}

// Two deterministic inputs that agree on the window yet produce different
// output marginals at the watched cell.
struct SignallingCounterexample {
  Word input_a, input_b;
  int output_cell = 0;
  double deviation = 0.0;
};

struct ShapeWitness {
  CircuitShape shape;
  std::vector<Eigen::MatrixXd> boxes;
};

struct Verdict {
  CausalProperty property{};
  VerdictStatus status{};
  // Search properties only: Frobenius gap of the best factorization found.
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, StochMap>> factor_witness;
  std::optional<ShapeWitness> shape_witness;
  std::optional<SignallingCounterexample> signalling_counterexample;
  std::optional<int> failing_cell;
  std::optional<int> failing_symbol;
  std::string note;

  bool holds() const { return status == VerdictStatus::proved; }
};

// The default watch window of output cell i: input cells {i-1, i}, clipped to
// the map's input region.
inline Region default_window(const StochMap& g, int i) {
  std::vector<int> labels;
  for (int c : {i - 1, i})
    if (g.in_region().contains_label(c)) labels.push_back(c);
  return g.in_region().restricted_to(labels);
}

// Checks that the output marginal at cell i depends on the input only through
// the window: all deterministic inputs agreeing on the window must give the
// same marginal at i (sufficient by linearity, since differences of such
// point states span the kernel of the window marginalization).
inline Verdict check_non_signalling(const StochMap& g, int i, const Region& window,
                                    double tol = kStochasticTol) {
  if (!g.out_region().contains_label(i))
    throw std::invalid_argument("check_non_signalling: output cell out of range");
  if (!g.in_region().subsumes(window))
    throw std::invalid_argument("check_non_signalling: window is not an input subregion");

  const Region cell = g.out_region().restricted_to({i});
  const int d = cell.dim_at(0);
  auto cell_of_row = index_map(g.out_region(), cell);
  auto window_of_col = index_map(g.in_region(), window);

  // Per input column, the output marginal at cell i.
  Eigen::MatrixXd marg = Eigen::MatrixXd::Zero(d, g.cols());
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) marg(cell_of_row[r], c) += g.at(r, c);

  // Group columns by their window restriction and track elementwise extremes.
  const std::int64_t groups = window.word_count();
  Eigen::MatrixXd lo = Eigen::MatrixXd::Constant(d, groups, 2.0);
  Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(d, groups, -1.0);
  std::vector<std::vector<Eigen::Index>> members(groups);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    auto w = window_of_col[c];
    lo.col(w) = lo.col(w).cwiseMin(marg.col(c));
    hi.col(w) = hi.col(w).cwiseMax(marg.col(c));
    members[w].push_back(c);
  }

  Verdict verdict;
  verdict.property = CausalProperty::non_signalling;
  double worst = 0.0;
  std::int64_t worst_group = -1;
  int worst_sym = -1;
  for (std::int64_t w = 0; w < groups; ++w) {
    if (members[w].empty()) continue;
    for (int s = 0; s < d; ++s) {
      double dev = hi(s, w) - lo(s, w);
      if (dev > worst) {
        worst = dev;
        worst_group = w;
        worst_sym = s;
      }
    }
  }
  if (worst <= tol) {
    verdict.status = VerdictStatus::proved;
    return verdict;
  }
  // Recover an actual violating pair from the extreme columns.
  Eigen::Index col_lo = members[worst_group].front(), col_hi = col_lo;
  for (Eigen::Index c : members[worst_group]) {
    if (marg(worst_sym, c) <= marg(worst_sym, col_lo)) col_lo = c;
    if (marg(worst_sym, c) >= marg(worst_sym, col_hi)) col_hi = c;
  }
  verdict.status = VerdictStatus::refuted;
  verdict.signalling_counterexample =
      SignallingCounterexample{word_at(g.in_region(), col_lo), word_at(g.in_region(), col_hi),
                               i, worst};
  verdict.failing_cell = i;
  verdict.note = "output marginal at cell " + std::to_string(i) + " moves by " +
                 std::to_string(worst) + " between inputs agreeing on the window";
  return verdict;
}

inline Verdict check_non_signalling(const StochMap& g, int i, double tol = kStochasticTol) {
  return check_non_signalling(g, i, default_window(g, i), tol);
}

// Quantifies over every output cell with the default window.
inline Verdict check_non_signalling_all(const StochMap& g, double tol = kStochasticTol) {
  for (int i : g.out_region().cells()) {
    Verdict v = check_non_signalling(g, i, tol);
    if (v.status != VerdictStatus::proved) return v;
  }
  Verdict v;
  v.property = CausalProperty::non_signalling;
  v.status = VerdictStatus::proved;
  v.note = "all output cells";
  return v;
}

// Traces out the output at cell x and asks whether the remaining map splits
// as A (x) B. The left factor takes input and output cells with label < x;
// the input cell x itself belongs to the right factor.
inline Verdict check_non_correlating(const StochMap& g, int x, double tol = kStochasticTol) {
  if (!g.out_region().contains_label(x))
    throw std::invalid_argument("check_non_correlating: output cell out of range");
  StochMap traced = trace_out_map(g, g.out_region().restricted_to({x}));
  Cut cut = cut_below_label(traced, x);
  Verdict verdict;
  verdict.property = CausalProperty::non_correlating;
  auto factors = factor_product(traced, cut, tol);
  if (factors) {
    verdict.status = VerdictStatus::proved;
    verdict.factor_witness.emplace_back("A", factors->left);
    verdict.factor_witness.emplace_back("B", factors->right);
    verdict.residual = factors->residual;
    return verdict;
  }
  verdict.status = VerdictStatus::refuted;
  verdict.failing_cell = x;
  verdict.note = "no stochastic product across the cut at output cell " + std::to_string(x);
  return verdict;
}

inline Verdict check_non_correlating_all(const StochMap& g, double tol = kStochasticTol) {
  for (int x : g.out_region().cells()) {
    Verdict v = check_non_correlating(g, x, tol);
    if (v.status != VerdictStatus::proved) return v;
  }
  Verdict v;
  v.property = CausalProperty::non_correlating;
  v.status = VerdictStatus::proved;
  v.note = "all output cells";
  return v;
}

namespace detail {

// Columns of g with input cell i pinned to symbol x, as a map over the
// remaining inputs.
inline StochMap restrict_input(const StochMap& g, int i, int x) {
  const Region cell = g.in_region().restricted_to({i});
  Region rest = g.in_region().without(cell);
  auto rest_of_col = index_map(g.in_region(), rest);
  auto cell_of_col = index_map(g.in_region(), cell);
  Eigen::MatrixXd m(g.rows(), rest.word_count());
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    if (cell_of_col[c] == x) m.col(rest_of_col[c]) = g.matrix().col(c);
  return StochMap(std::move(rest), g.out_region(), std::move(m));
}

}  // namespace detail

// Screening-off at input cell i: for every symbol x of that cell, the map
// restricted to input i = x must split into independent left/right parts
// across the cut at i. The restricted input cut is forced (cells < i against
// cells > i); the output cell at i, when present, may sit on either side, and
// both assignments are tried. Assignments that leave one side with no wires
// at all are vacuous and not accepted as witnesses.
inline Verdict check_screening_off(const StochMap& g, int i, double tol = kStochasticTol) {
  if (!g.in_region().contains_label(i))
    throw std::invalid_argument("check_screening_off: input cell out of range");
  const int d = g.in_region().dim_of_label(i);

  Verdict verdict;
  verdict.property = CausalProperty::screening_off;
  for (int x = 0; x < d; ++x) {
    StochMap gx = detail::restrict_input(g, i, x);
    bool found = false;
    for (int own_right : {0, 1}) {
      Cut cut = cut_below_label(gx, i + (own_right ? 0 : 1));
      // cut_below_label splits inputs at the same threshold; inputs never
      // contain i here, so only the output ownership differs between tries.
      bool left_empty = cut.in_left.empty() && cut.out_left.empty();
      bool right_empty = cut.in_right.empty() && cut.out_right.empty();
      if (left_empty || right_empty) continue;
      auto factors = factor_product(gx, cut, tol);
      if (factors) {
        std::string tag = "@" + std::to_string(i) + "=" + std::to_string(x);
        verdict.factor_witness.emplace_back("A" + tag, factors->left);
        verdict.factor_witness.emplace_back("B" + tag, factors->right);
        found = true;
        break;
      }
    }
    if (!found) {
      verdict.status = VerdictStatus::refuted;
      verdict.failing_cell = i;
      verdict.failing_symbol = x;
      verdict.factor_witness.clear();
      verdict.note = "conditioning input cell " + std::to_string(i) + " on symbol " +
                     std::to_string(x) + " does not split the map";
      return verdict;
    }
  }
  verdict.status = VerdictStatus::proved;
  return verdict;
}

inline Verdict check_screening_off_all(const StochMap& g, double tol = kStochasticTol) {
  for (int i : g.in_region().cells()) {
    Verdict v = check_screening_off(g, i, tol);
    if (v.status != VerdictStatus::proved) return v;
  }
  Verdict v;
  v.property = CausalProperty::screening_off;
  v.status = VerdictStatus::proved;
  v.note = "all input cells";
  return v;
}

// Wraps a factorization-search outcome into a verdict. Search misses are
// reported as search-exhausted, never as refutations: the alternating
// minimization carries no nonexistence certificate.
inline Verdict verdict_from_search(const FactorShapeResult& result, const CircuitShape& shape,
                                   CausalProperty property) {
  Verdict v;
  v.property = property;
  v.status = result.status == SearchStatus::converged ? VerdictStatus::proved
                                                      : VerdictStatus::search_exhausted;
  v.residual = result.residual;
  v.shape_witness = ShapeWitness{shape, result.boxes};
  v.note = "best restart " + std::to_string(result.best_restart) + ", " +
           std::to_string(result.sweeps) + " sweeps";
  return v;
}

// Searches for a V factorization of g screened at input cell i, sweeping the
// hidden wire dimension. Stops at the first dimension that yields a witness.
inline Verdict check_v_causal(const StochMap& g, int i, const std::vector<int>& dim_sweep,
                              const SearchParams& params = {}) {
  if (dim_sweep.empty()) throw std::invalid_argument("check_v_causal: empty dimension sweep");
  Verdict best;
  bool have = false;
  for (int h : dim_sweep) {
    CircuitShape shape = v_shape(g.in_region(), g.out_region(), i, VWireDims(h));
    FactorShapeResult result = factor_shape(g, shape, params);
    Verdict v = verdict_from_search(result, shape, CausalProperty::v_causal);
    v.note += ", hidden dims " + std::to_string(h);
    if (v.status == VerdictStatus::proved) return v;
    if (!have || v.residual < best.residual) {
      best = v;
      have = true;
    }
  }
  return best;
}

// Bell score S = E(0,0) + E(0,1) + E(1,0) - E(1,1) of a two-party box with
// binary inputs and outputs, where E(a,b) is the correlator of the two
// output bits under input (a,b).
inline double chsh(const StochMap& box) {
  if (box.in_region().cell_count() != 2 || box.out_region().cell_count() != 2 ||
      box.in_region().dims() != std::vector<int>{2, 2} ||
      box.out_region().dims() != std::vector<int>{2, 2})
    throw std::invalid_argument("chsh: box must have two binary inputs and outputs");
  auto correlator = [&](int a, int b) {
    double e = 0.0;
    const Eigen::Index col = 2 * a + b;
    for (int x1 = 0; x1 < 2; ++x1)
      for (int x2 = 0; x2 < 2; ++x2)
        e += ((x1 ^ x2) ? -1.0 : 1.0) * box.at(2 * x1 + x2, col);
    return e;
  };
  return correlator(0, 0) + correlator(0, 1) + correlator(1, 0) - correlator(1, 1);
}

// Maximum CHSH score over the 16 pairs of deterministic single-party
// strategies x1 = f(a), x2 = g(b).
inline double classical_chsh_bound() {
  const Region one = Region::uniform({0}, 2);
  double best = -std::numeric_limits<double>::infinity();
  for (int f = 0; f < 4; ++f)
    for (int g = 0; g < 4; ++g) {
      auto strategy = [](int table, int a) { return (table >> a) & 1; };
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          m(2 * strategy(f, a) + strategy(g, b), 2 * a + b) = 1.0;
      StochMap box(Region::uniform({1, 2}, 2), Region::uniform({1, 2}, 2), std::move(m));
      best = std::max(best, chsh(box));
    }
  return best;
}

}  // namespace stochcell::causality
