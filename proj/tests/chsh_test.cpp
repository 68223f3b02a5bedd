#include <gtest/gtest.h>

#include <random>

#include "stochcell/causality.hpp"
#include "stochcell/gallery.hpp"
#include "test_util.hpp"

using namespace stochcell;
using namespace stochcell::causality;

namespace {

// Independent correlator evaluation straight from the definition.
double oracle_chsh(const StochMap& box) {
  auto e = [&](int a, int b) {
    double same = 0.0, diff = 0.0;
    State out = apply(box, point_state(box.in_region(), {a, b}));
    for_each_word(out.region(), [&](const Word& w, std::int64_t idx) {
      (w[0] == w[1] ? same : diff) += out.probs()[idx];
    });
    return same - diff;
  };
  return e(0, 0) + e(0, 1) + e(1, 0) - e(1, 1);
}

TEST(Chsh, NLBoxScoresFour) {
  EXPECT_DOUBLE_EQ(chsh(gallery::nlbox()), 4.0);
  EXPECT_DOUBLE_EQ(oracle_chsh(gallery::nlbox()), 4.0);
}

TEST(Chsh, ConstantUniformBoxScoresZero) {
  Region two = Region::uniform({1, 2}, 2);
  StochMap u = constant_map(two, uniform_state(two));
  EXPECT_DOUBLE_EQ(chsh(u), 0.0);
}

TEST(Chsh, MatchesOracleOnRandomBoxes) {
  std::mt19937_64 rng(71);
  Region two = Region::uniform({1, 2}, 2);
  for (int trial = 0; trial < 100; ++trial) {
    StochMap box = testutil::random_map(two, two, rng);
    EXPECT_NEAR(chsh(box), oracle_chsh(box), 1e-12);
  }
}

TEST(Chsh, RejectsWrongSignature) {
  EXPECT_THROW(chsh(gallery::parity(3)), std::invalid_argument);
  Region three = Region::uniform({1, 2}, 3);
  StochMap triple = constant_map(three, uniform_state(three));
  EXPECT_THROW(chsh(triple), std::invalid_argument);
}

TEST(ClassicalBound, ExhaustiveEnumerationGivesTwo) {
  EXPECT_DOUBLE_EQ(classical_chsh_bound(), 2.0);
}

TEST(ClassicalBound, RandomProductBoxesNeverExceedIt) {
  std::mt19937_64 rng(73);
  const double bound = classical_chsh_bound();
  Region a_in = Region::uniform({1}, 2), a_out = Region::uniform({1}, 2);
  Region b_in = Region::uniform({2}, 2), b_out = Region::uniform({2}, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    StochMap box = tensor_map(testutil::random_map(a_in, a_out, rng),
                              testutil::random_map(b_in, b_out, rng));
    EXPECT_LE(chsh(box), bound + 1e-12);
  }
  EXPECT_GT(chsh(gallery::nlbox()), bound);
}

}  // namespace
