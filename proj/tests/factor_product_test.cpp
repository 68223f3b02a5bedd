#include <gtest/gtest.h>

#include <random>

#include "stochcell/factor_product.hpp"
#include "stochcell/gallery.hpp"
#include "test_util.hpp"

using namespace stochcell;

namespace {

Cut middle_cut(const StochMap& s, int x) { return cut_below_label(s, x); }

TEST(FactorProduct, RecoversPlantedFactors) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    Region in_l = testutil::random_region(rng, 2, 3, -4, -1);
    Region out_l = testutil::random_region(rng, 2, 3, -4, -1);
    Region in_r = testutil::random_region(rng, 2, 3, 0, 4);
    Region out_r = testutil::random_region(rng, 2, 3, 0, 4);
    StochMap a = testutil::random_map(in_l, out_l, rng);
    StochMap b = testutil::random_map(in_r, out_r, rng);
    StochMap product = tensor_map(a, b);
    auto factors = factor_product(product, Cut{in_l, in_r, out_l, out_r});
    ASSERT_TRUE(factors.has_value());
    EXPECT_LE(factors->residual, 1e-12);
    // Any returned pair must reconstruct the input map.
    StochMap rebuilt = tensor_map(factors->left, factors->right);
    EXPECT_LT(testutil::max_abs_diff(rebuilt.matrix(), product.matrix()), 1e-9);
  }
}

TEST(FactorProduct, RefusesMagicCoinsAcrossTheMiddle) {
  for (int n : {2, 3, 4, 5}) {
    StochMap mc = gallery::magic_coins(n);
    auto factors = factor_product(mc, middle_cut(mc, 1 + n / 2));
    EXPECT_FALSE(factors.has_value()) << "n = " << n;
  }
}

TEST(FactorProduct, UniformConstantFactorizes) {
  Region two = Region::uniform({1, 2}, 2);
  StochMap u = constant_map(two, uniform_state(two));
  auto factors = factor_product(u, middle_cut(u, 2));
  ASSERT_TRUE(factors.has_value());
  // Both factors are uniform preparations that ignore their input.
  for (const StochMap* f : {&factors->left, &factors->right})
    for (Eigen::Index c = 0; c < f->cols(); ++c)
      for (Eigen::Index r = 0; r < f->rows(); ++r) EXPECT_NEAR(f->at(r, c), 0.5, 1e-12);
}

TEST(FactorProduct, EmptySideYieldsScalarFactor) {
  std::mt19937_64 rng(43);
  Region in = Region::uniform({1, 2}, 2), out = Region::uniform({1, 2}, 2);
  StochMap s = testutil::random_map(in, out, rng);
  // Cut with everything on the right: the left factor is the scalar unit.
  auto factors = factor_product(s, middle_cut(s, 0));
  ASSERT_TRUE(factors.has_value());
  EXPECT_TRUE(factors->left.in_region().empty());
  EXPECT_TRUE(factors->left.out_region().empty());
  EXPECT_NEAR(factors->left.at(0, 0), 1.0, 1e-12);
  EXPECT_LT(testutil::max_abs_diff(factors->right.matrix(), s.matrix()), 1e-9);
}

TEST(FactorProduct, SoundOnNonProducts) {
  // A correlated two-bit preparation has no product form; the best dyad
  // cannot reconstruct it.
  Region two = Region::uniform({1, 2}, 2);
  Eigen::VectorXd v(4);
  v << 0.5, 0.0, 0.0, 0.5;
  StochMap prep = as_preparation(State(two, v));
  auto factors = factor_product(prep, middle_cut(prep, 2));
  EXPECT_FALSE(factors.has_value());
}

TEST(FactorProduct, RejectsMalformedCut) {
  std::mt19937_64 rng(47);
  Region in = Region::uniform({1, 2}, 2), out = Region::uniform({1, 2}, 2);
  StochMap s = testutil::random_map(in, out, rng);
  Cut bad{in.restricted_to({1}), in, out.restricted_to({1}), out.restricted_to({2})};
  EXPECT_THROW(factor_product(s, bad), std::invalid_argument);
}

TEST(FactorProduct, CompletenessAndSoundnessRandomized) {
  std::mt19937_64 rng(53);
  int planted_hits = 0, perturbed_misses = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Region in_l = Region::uniform({1}, 2), in_r = Region::uniform({2}, 2);
    Region out_l = Region::uniform({1}, 2), out_r = Region::uniform({2}, 2);
    StochMap a = testutil::random_map(in_l, out_l, rng);
    StochMap b = testutil::random_map(in_r, out_r, rng);
    StochMap product = tensor_map(a, b);
    if (factor_product(product, Cut{in_l, in_r, out_l, out_r})) ++planted_hits;

    // Shift a column by a macroscopic correlation term and retest.
    Eigen::MatrixXd m = product.matrix();
    Eigen::VectorXd bump(4);
    bump << 0.2, -0.2, -0.2, 0.2;
    m.col(0) += bump;
    m.col(0) = m.col(0).cwiseMax(0.0);
    m.col(0) /= m.col(0).sum();
    StochMap twisted(product.in_region(), product.out_region(), m);
    if (!factor_product(twisted, Cut{in_l, in_r, out_l, out_r})) ++perturbed_misses;
  }
  EXPECT_EQ(planted_hits, 100);
  EXPECT_GT(perturbed_misses, 90);
}

}  // namespace
