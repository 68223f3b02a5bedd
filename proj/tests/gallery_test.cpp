#include <gtest/gtest.h>

#include "stochcell/gallery.hpp"
#include "test_util.hpp"

using namespace stochcell;
using namespace stochcell::gallery;

namespace {

int parity_of(const Word& w) {
  int p = 0;
  for (int v : w) p ^= (v & 1);
  return p;
}

// Brute-force oracle: uniform weight over the n-bit words of the given
// parity, enumerated directly.
Eigen::VectorXd oracle_parity_uniform(int n, int parity) {
  Region r = Region::interval(1, n, 2);
  std::vector<std::int64_t> hits;
  for_each_word(r, [&](const Word& w, std::int64_t idx) {
    if (parity_of(w) == parity) hits.push_back(idx);
  });
  Eigen::VectorXd v = Eigen::VectorXd::Zero(r.word_count());
  for (auto idx : hits) v[idx] = 1.0 / static_cast<double>(hits.size());
  return v;
}

void expect_inputs_ignored(const StochMap& m, const std::vector<int>& ignored_cells) {
  // Columns must agree whenever the inputs differ only on ignored cells.
  const Region& in = m.in_region();
  Region watched = in.without(in.restricted_to(ignored_cells));
  auto watch_of = index_map(in, watched);
  for (Eigen::Index c1 = 0; c1 < m.cols(); ++c1)
    for (Eigen::Index c2 = c1 + 1; c2 < m.cols(); ++c2)
      if (watch_of[c1] == watch_of[c2])
        ASSERT_LT((m.matrix().col(c1) - m.matrix().col(c2)).cwiseAbs().maxCoeff(), 1e-15);
}

void expect_strict_subset_marginals_uniform(const State& s) {
  const Region& r = s.region();
  const int n = r.cell_count();
  // All nonempty strict subsets of the output cells.
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    std::vector<int> keep;
    for (int p = 0; p < n; ++p)
      if (mask & (1 << p)) keep.push_back(r.cells()[p]);
    State m = marginal(s, r.without(r.restricted_to(keep)));
    for (Eigen::Index i = 0; i < m.probs().size(); ++i)
      ASSERT_NEAR(m.probs()[i], 1.0 / static_cast<double>(m.probs().size()), 1e-12);
  }
}

TEST(Parity, SmallCasesMatchEnumeration) {
  StochMap p2 = parity(2);
  Eigen::VectorXd expect2(4);
  expect2 << 0.5, 0, 0, 0.5;
  for (int c = 0; c < 4; ++c)
    EXPECT_LT((p2.matrix().col(c) - expect2).cwiseAbs().maxCoeff(), 1e-15);

  StochMap p3 = parity(3);
  for (int c = 0; c < 8; ++c)
    EXPECT_LT((p3.matrix().col(c) - oracle_parity_uniform(3, 0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(parity(1), std::invalid_argument);
}

TEST(Parity, SupportAndMarginals) {
  for (int n = 2; n <= 8; ++n) {
    StochMap p = parity(n);
    expect_inputs_ignored(p, p.in_region().cells());
    State out = apply(p, point_state(p.in_region(), Word(n, 0)));
    for_each_word(out.region(), [&](const Word& w, std::int64_t idx) {
      if (parity_of(w) == 0)
        EXPECT_GT(out.probs()[idx], 0.0);
      else
        EXPECT_EQ(out.probs()[idx], 0.0);
    });
    expect_strict_subset_marginals_uniform(out);
    // Single-cell marginals are fair coins.
    for (int c : out.region().cells()) {
      State m = marginal(out, out.region().without(out.region().restricted_to({c})));
      EXPECT_NEAR(m.probs()[0], 0.5, 1e-15);
    }
  }
}

TEST(MagicCoins, SharedCoinAtTheEnds) {
  StochMap m2 = magic_coins(2);
  Eigen::VectorXd expect2(4);
  expect2 << 0.5, 0, 0, 0.5;
  for (int c = 0; c < 4; ++c)
    EXPECT_LT((m2.matrix().col(c) - expect2).cwiseAbs().maxCoeff(), 1e-15);

  StochMap m3 = magic_coins(3);
  State out = apply(m3, point_state(m3.in_region(), {0, 0, 0}));
  EXPECT_DOUBLE_EQ(out.at(Word{0, 0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(out.at(Word{1, 0, 1}), 0.5);

  for (int n = 2; n <= 6; ++n) {
    StochMap mc = magic_coins(n);
    expect_inputs_ignored(mc, mc.in_region().cells());
    State o = apply(mc, point_state(mc.in_region(), Word(n, 0)));
    // The two end cells are uniform and always equal.
    double equal_mass = 0.0;
    for_each_word(o.region(), [&](const Word& w, std::int64_t idx) {
      if (w.front() == w.back()) equal_mass += o.probs()[idx];
    });
    EXPECT_NEAR(equal_mass, 1.0, 1e-15);
    State end = marginal(o, o.region().without(o.region().restricted_to({1})));
    EXPECT_NEAR(end.probs()[0], 0.5, 1e-15);
  }
}

TEST(NLBox, ParityFollowsProductOfInputs) {
  StochMap box = nlbox();
  // Input (1,1): outputs of odd parity, each 1/2.
  Eigen::VectorXd odd(4), even(4);
  odd << 0, 0.5, 0.5, 0;
  even << 0.5, 0, 0, 0.5;
  EXPECT_LT((box.matrix().col(3) - odd).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((box.matrix().col(0) - even).cwiseAbs().maxCoeff(), 1e-15);
  // Single-output marginals are uniform for every input.
  for (int c = 0; c < 4; ++c) {
    State out(box.out_region(), box.matrix().col(c));
    for (int cell : {1, 2}) {
      State m = marginal(out, out.region().without(out.region().restricted_to({cell})));
      EXPECT_NEAR(m.probs()[0], 0.5, 1e-15);
    }
  }
}

TEST(GenNLBox, MatchesEnumerationAndReducesToNLBox) {
  StochMap g3 = gen_nlbox(3);
  // a = b = 1: uniform over odd words.
  EXPECT_LT((g3.matrix().col(word_index(g3.in_region(), {1, 0, 1})) -
             oracle_parity_uniform(3, 1))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
  // a = 1, b = 0: the product vanishes, even-parity support.
  EXPECT_LT((g3.matrix().col(word_index(g3.in_region(), {1, 0, 0})) -
             oracle_parity_uniform(3, 0))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
  EXPECT_EQ(gen_nlbox(2), nlbox());

  for (int n = 2; n <= 8; ++n) {
    StochMap g = gen_nlbox(n);
    // Interior inputs are ignored.
    std::vector<int> interior;
    for (int c = 2; c < n; ++c) interior.push_back(c);
    expect_inputs_ignored(g, interior);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        Word in(n, 0);
        in.front() = a;
        in.back() = b;
        State out = apply(g, point_state(g.in_region(), in));
        for_each_word(out.region(), [&](const Word& w, std::int64_t idx) {
          if (parity_of(w) != (a & b)) EXPECT_EQ(out.probs()[idx], 0.0);
        });
        expect_strict_subset_marginals_uniform(out);
      }
  }
}

TEST(VBox, EqualMixtureOfParities) {
  StochMap v2 = vbox(2);
  // a = b = 1: every word has weight 1/4.
  for (int r = 0; r < 4; ++r) EXPECT_NEAR(v2.at(r, 3), 0.25, 1e-15);
  // a*b = 0: both branches even, shared-coin distribution.
  EXPECT_NEAR(v2.at(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(v2.at(3, 1), 0.5, 1e-15);
  EXPECT_NEAR(v2.at(1, 2), 0.0, 1e-15);
}

TEST(VkBox, ClosedFormWeightsAndAnchors) {
  for (int n : {2, 3, 4}) {
    EXPECT_EQ(vk_box(1, n), vbox(n)) << "depth-1 anchor at n = " << n;
  }
  StochMap v22 = vk_box(2, 2);
  Eigen::Index c11 = word_index(v22.in_region(), {1, 1});
  EXPECT_NEAR(v22.at(0, c11), 3.0 / 8.0, 1e-15);
  EXPECT_NEAR(v22.at(3, c11), 3.0 / 8.0, 1e-15);
  EXPECT_NEAR(v22.at(1, c11), 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(v22.at(2, c11), 1.0 / 8.0, 1e-15);

  for (int k : {1, 2, 3})
    for (int n : {2, 3, 4}) {
      StochMap v = vk_box(k, n);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          Word in(n, 0);
          in.front() = a;
          in.back() = b;
          State out = apply(v, point_state(v.in_region(), in));
          expect_strict_subset_marginals_uniform(out);
          // Global parity distribution: {a*b: 2^-k, 0: 1 - 2^-k}.
          double odd_mass = 0.0;
          for_each_word(out.region(), [&](const Word& w, std::int64_t idx) {
            if (parity_of(w) == 1) odd_mass += out.probs()[idx];
          });
          double expect_odd = (a & b) ? std::ldexp(1.0, -k) : 0.0;
          EXPECT_NEAR(odd_mass, expect_odd, 1e-15);
        }
      // Input-independence where the captions pin it: interior cells.
      std::vector<int> interior;
      for (int c = 2; c < n; ++c) interior.push_back(c);
      expect_inputs_ignored(v, interior);
    }
}

TEST(QuiescentEmbed, ConditionalApplication) {
  StochMap embedded = quiescent_embed(parity(2), 4, 1);
  const Region& cells = embedded.in_region();
  EXPECT_EQ(cells, Region::interval(1, 4, 3));

  // All-quiescent input passes through unchanged.
  Word all_q(4, 0);
  State out_q = apply(embedded, point_state(cells, all_q));
  EXPECT_DOUBLE_EQ(out_q.at(all_q), 1.0);

  // Window fully non-quiescent: the window behaves like parity(2), the rest
  // passes through.
  Word in = {0, 1, 2, 0};  // q 0 1 q in symbols
  State out = apply(embedded, point_state(cells, in));
  Region window = cells.restricted_to({2, 3});
  State window_marg = marginal(out, cells.without(window));
  EXPECT_NEAR(window_marg.at(Word{1, 1}), 0.5, 1e-15);  // binary 00
  EXPECT_NEAR(window_marg.at(Word{2, 2}), 0.5, 1e-15);  // binary 11
  EXPECT_NEAR(window_marg.at(Word{1, 2}), 0.0, 1e-15);
  // Cells outside the window are untouched.
  State rest = marginal(out, window);
  EXPECT_DOUBLE_EQ(rest.at(Word{0, 0}), 1.0);

  // A partially quiescent window falls back to the identity.
  Word half = {0, 1, 0, 1};
  State out_half = apply(embedded, point_state(cells, half));
  EXPECT_DOUBLE_EQ(out_half.at(half), 1.0);

  EXPECT_THROW(quiescent_embed(parity(2), 2, 1), std::invalid_argument);
}

TEST(GalleryRegistry, NamesRoundTrip) {
  for (const auto& entry : list_entries()) {
    auto name = map_name_from(to_string(entry.name));
    ASSERT_TRUE(name.has_value());
    EXPECT_EQ(*name, entry.name);
  }
  EXPECT_FALSE(map_name_from("nosuchmap").has_value());
  GalleryMap gm = make(MapName::vk_box, 3, 2);
  EXPECT_EQ(gm.k, 2);
  EXPECT_EQ(gm.map, vk_box(2, 3));
}

}  // namespace
