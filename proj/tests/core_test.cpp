#include <gtest/gtest.h>

#include <random>

#include "stochcell/finite_config.hpp"
#include "stochcell/state.hpp"
#include "stochcell/stoch_map.hpp"
#include "test_util.hpp"

using namespace stochcell;
using testutil::max_abs_diff;

namespace {

StochMap bsc(double p, int cell = 0) {
  Eigen::MatrixXd m(2, 2);
  m << 1 - p, p, p, 1 - p;
  Region r = Region::uniform({cell}, 2);
  return StochMap(r, r, std::move(m));
}

StochMap coin(int cell = 0) {
  Region r = Region::uniform({cell}, 2);
  return constant_map(r, uniform_state(r));
}

TEST(Region, InvariantsEnforced) {
  EXPECT_THROW(Region({2, 1}, {2, 2}), std::invalid_argument);
  EXPECT_THROW(Region({1, 1}, {2, 2}), std::invalid_argument);
  EXPECT_THROW(Region({0}, {0}), std::invalid_argument);
  EXPECT_EQ(Region().word_count(), 1);
  EXPECT_EQ(Region({0, 3}, {2, 5}).word_count(), 10);
}

TEST(Region, WordIndexingIsLexicographicMostSignificantFirst) {
  Region r({0, 1}, {2, 3});
  EXPECT_EQ(word_index(r, {0, 0}), 0);
  EXPECT_EQ(word_index(r, {0, 2}), 2);
  EXPECT_EQ(word_index(r, {1, 0}), 3);
  EXPECT_EQ(word_at(r, 5), (Word{1, 2}));
  EXPECT_THROW(word_index(r, {0, 3}), std::invalid_argument);
}

TEST(PointState, MatchesIndicator) {
  State s = point_state(Region::uniform({0}, 2), {1});
  EXPECT_EQ(s.probs()[0], 0.0);
  EXPECT_EQ(s.probs()[1], 1.0);

  State t = point_state(Region::uniform({0, 1}, 2), {1, 0});
  Eigen::VectorXd expect(4);
  expect << 0, 0, 1, 0;
  EXPECT_EQ(t.probs(), expect);

  State scalar = point_state(Region(), {});
  EXPECT_EQ(scalar.probs().size(), 1);
  EXPECT_EQ(scalar.probs()[0], 1.0);
}

TEST(Mix, ConvexCombination) {
  Region r = Region::uniform({0}, 2);
  State a = point_state(r, {0}), b = point_state(r, {1});
  EXPECT_EQ(mix(1.0, a, b), a);
  State half = mix(0.5, a, b);
  EXPECT_DOUBLE_EQ(half.probs()[0], 0.5);
  State m = mix(0.3, a, b);
  EXPECT_DOUBLE_EQ(m.probs()[0], 0.3);
  EXPECT_DOUBLE_EQ(m.probs()[1], 0.7);
  EXPECT_THROW(mix(0.5, a, point_state(Region::uniform({1}, 2), {0})), std::invalid_argument);
}

TEST(Apply, MatchesColumnReadoff) {
  Region r = Region::uniform({0}, 2);
  State rho = point_state(r, {0});
  EXPECT_EQ(apply(identity_map(r), rho), rho);
  State out = apply(coin(), rho);
  EXPECT_DOUBLE_EQ(out.probs()[0], 0.5);
  State flipped = apply(bsc(0.1), rho);
  EXPECT_DOUBLE_EQ(flipped.probs()[0], 0.9);
  EXPECT_DOUBLE_EQ(flipped.probs()[1], 0.1);
}

TEST(Compose, BinarySymmetricChannelsAccumulate) {
  StochMap twice = compose(bsc(0.1), bsc(0.1));
  EXPECT_NEAR(twice.at(1, 0), 0.18, 1e-15);
  EXPECT_NEAR(twice.at(0, 0), 0.82, 1e-15);
  EXPECT_EQ(compose(identity_map(bsc(0.1).out_region()), bsc(0.1)), bsc(0.1));
  // A constant map absorbs whatever runs before it.
  StochMap absorbed = compose(coin(), bsc(0.3));
  EXPECT_EQ(absorbed.matrix(), coin().matrix());
}

TEST(TensorMap, IdentityAndUniform) {
  Region r0 = Region::uniform({0}, 2), r1 = Region::uniform({1}, 2);
  EXPECT_EQ(tensor_map(identity_map(r0), identity_map(r1)),
            identity_map(Region::uniform({0, 1}, 2)));
  StochMap cc = tensor_map(coin(0), coin(1));
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) EXPECT_DOUBLE_EQ(cc.at(r, c), 0.25);
}

TEST(TensorMap, DefiningPropertyOnRandomInstances) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    Region in_a = testutil::random_region(rng, 2, 3, -4, 0);
    Region out_a = testutil::random_region(rng, 2, 3, -4, 0);
    Region in_b = testutil::random_region(rng, 2, 3, 1, 5);
    Region out_b = testutil::random_region(rng, 2, 3, 1, 5);
    StochMap s = testutil::random_map(in_a, out_a, rng);
    StochMap t = testutil::random_map(in_b, out_b, rng);
    State rho = testutil::random_state(in_a, rng);
    State sigma = testutil::random_state(in_b, rng);
    State lhs = apply(tensor_map(s, t), tensor_state(rho, sigma));
    State rhs = tensor_state(apply(s, rho), apply(t, sigma));
    EXPECT_LT(max_abs_diff(lhs.probs(), rhs.probs()), 1e-12);
  }
}

TEST(TensorState, InterleavedLabelsMatchBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Region ra = testutil::random_region(rng, 3, 3, -5, 2);
    Region rb0 = testutil::random_region(rng, 3, 3, -2, 5);
    // Drop any labels of rb0 colliding with ra to keep the pair disjoint.
    std::vector<int> keep;
    for (int c : rb0.cells())
      if (!ra.contains_label(c)) keep.push_back(c);
    Region rb = rb0.restricted_to(keep);
    State a = testutil::random_state(ra, rng);
    State b = testutil::random_state(rb, rng);
    State joint = tensor_state(a, b);
    auto brute = testutil::brute_tensor(testutil::brute_dist(a), testutil::brute_dist(b));
    EXPECT_LT(testutil::brute_max_diff(testutil::brute_dist(joint), brute), 1e-14);
  }
}

TEST(Marginal, RowSumsAndUnits) {
  Region r = Region::uniform({0, 1}, 2);
  Eigen::VectorXd v(4);
  v << 0.5, 0, 0, 0.5;
  State rho(r, v);
  State first = marginal(rho, r.restricted_to({1}));
  EXPECT_DOUBLE_EQ(first.probs()[0], 0.5);
  EXPECT_DOUBLE_EQ(first.probs()[1], 0.5);
  EXPECT_EQ(marginal(rho, Region()), rho);
  EXPECT_THROW(marginal(rho, Region::uniform({7}, 2)), std::invalid_argument);
}

TEST(Marginal, RecoversTensorFactors) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    Region ra = testutil::random_region(rng, 3, 3, -5, 0);
    Region rb0 = testutil::random_region(rng, 3, 3, 1, 6);
    State a = testutil::random_state(ra, rng);
    State b = testutil::random_state(rb0, rng);
    State joint = tensor_state(a, b);
    State back = marginal(joint, rb0);
    EXPECT_EQ(back.region(), ra);
    EXPECT_LT(max_abs_diff(back.probs(), a.probs()), 1e-12);
  }
}

TEST(TraceOutMap, ProjectionAndFactorDiscard) {
  Region two = Region::uniform({0, 1}, 2);
  StochMap keep_first = trace_out_map(identity_map(two), two.restricted_to({1}));
  // Deterministic projection onto the first cell.
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 2; ++r)
      EXPECT_DOUBLE_EQ(keep_first.at(r, c), (c / 2 == r) ? 1.0 : 0.0);

  std::mt19937_64 rng(17);
  StochMap a = testutil::random_map(Region::uniform({0}, 2), Region::uniform({0}, 3), rng);
  StochMap b = testutil::random_map(Region::uniform({1}, 3), Region::uniform({1}, 2), rng);
  StochMap ab = tensor_map(a, b);
  StochMap traced = trace_out_map(ab, ab.out_region().restricted_to({1}));
  // Discarding b's whole output leaves a's action times an input discard.
  StochMap direct = tensor_map(a, discard_map(b.in_region()));
  EXPECT_EQ(traced.out_region(), direct.out_region());
  EXPECT_LT(max_abs_diff(traced.matrix(), direct.matrix()), 1e-12);
}

TEST(Extend, DeltaBlockStructure) {
  std::mt19937_64 rng(19);
  StochMap s = testutil::random_map(Region::uniform({0}, 2), Region::uniform({0}, 2), rng);
  Region j = Region::uniform({1}, 2);
  StochMap ext = extend(s, j);
  // Entries S(u'|u) * delta_{v v'} laid out over the sorted union.
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v)
      for (int uo = 0; uo < 2; ++uo)
        for (int vo = 0; vo < 2; ++vo)
          EXPECT_DOUBLE_EQ(ext.at(2 * uo + vo, 2 * u + v), v == vo ? s.at(uo, u) : 0.0);

  EXPECT_EQ(extend(identity_map(Region::uniform({0}, 2)), j),
            identity_map(Region::uniform({0, 1}, 2)));

  StochMap back = trace_out_map(ext, ext.out_region().restricted_to({1}));
  // Marginalizing the extension and discarding the spectator input recovers s.
  for (int u = 0; u < 2; ++u)
    for (int uo = 0; uo < 2; ++uo)
      EXPECT_NEAR(back.at(uo, 2 * u + 0), s.at(uo, u), 1e-12);
}

TEST(ExtensionCommutation, DisjointLocalizationsCommute) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    Region ri = testutil::random_region(rng, 2, 2, -4, -1);
    Region rj = testutil::random_region(rng, 2, 2, 0, 4);
    if (ri.empty() || rj.empty()) continue;
    StochMap s = testutil::random_map(ri, ri, rng);
    StochMap t = testutil::random_map(rj, rj, rng);
    StochMap lhs = compose(extend(s, rj), extend(t, ri));
    StochMap rhs = compose(extend(t, ri), extend(s, rj));
    EXPECT_LT(max_abs_diff(lhs.matrix(), rhs.matrix()), 1e-12);
    EXPECT_LT(max_abs_diff(lhs.matrix(), tensor_map(s, t).matrix()), 1e-12);
  }
}

TEST(Associativity, ComposeAndTensorOnRandomTriples) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    Region r1 = testutil::random_region(rng, 2, 3, -6, -3);
    Region r2 = testutil::random_region(rng, 2, 3, -2, 1);
    Region r3 = testutil::random_region(rng, 2, 3, 2, 6);
    StochMap a = testutil::random_map(r1, r1, rng);
    StochMap b = testutil::random_map(r2, r2, rng);
    StochMap c = testutil::random_map(r3, r3, rng);
    EXPECT_LT(max_abs_diff(tensor_map(tensor_map(a, b), c).matrix(),
                           tensor_map(a, tensor_map(b, c)).matrix()),
              1e-12);
    StochMap f = testutil::random_map(r1, r2, rng);
    StochMap g = testutil::random_map(r2, r3, rng);
    StochMap h = testutil::random_map(r3, r3, rng);
    EXPECT_LT(max_abs_diff(compose(compose(h, g), f).matrix(),
                           compose(h, compose(g, f)).matrix()),
              1e-12);
  }
}

TEST(Normalization, ApplyPreservesTotalMass) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    Region in = testutil::random_region(rng, 3, 3, -3, 3);
    Region out = testutil::random_region(rng, 3, 3, -3, 3);
    StochMap s = testutil::random_map(in, out, rng);
    State rho = testutil::random_state(in, rng);
    EXPECT_NEAR(apply(s, rho).probs().sum(), 1.0, 1e-9);
  }
}

TEST(StochMapValidation, RejectsBadColumns) {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.2, 0.4, 0.8;
  Region r = Region::uniform({0}, 2);
  EXPECT_THROW(StochMap(r, r, bad), std::invalid_argument);
  Eigen::MatrixXd negative(2, 2);
  negative << 1.2, 0.0, -0.2, 1.0;
  EXPECT_THROW(StochMap(r, r, negative), std::invalid_argument);
}

TEST(ConfigDistance, ExamplesAndMetricAxioms) {
  Alphabet sigma(2);
  FiniteConfig empty(sigma, {});
  EXPECT_EQ(config_distance(empty, empty), 0.0);
  FiniteConfig at0(sigma, {{0, 1}});
  EXPECT_EQ(config_distance(empty, at0), 1.0);
  FiniteConfig at3(sigma, {{3, 1}});
  EXPECT_EQ(config_distance(empty, at3), 0.125);
  FiniteConfig far(sigma, {{-3, 1}});
  EXPECT_EQ(config_distance(far, at3), 0.125);
  EXPECT_THROW(config_distance(empty, FiniteConfig(Alphabet(3), {})), std::invalid_argument);

  std::mt19937_64 rng(37);
  auto random_config = [&]() {
    std::map<int, int> sup;
    for (int c = -4; c <= 4; ++c)
      if (rng() % 2) sup[c] = 1;
    return FiniteConfig(sigma, sup);
  };
  for (int trial = 0; trial < 200; ++trial) {
    FiniteConfig a = random_config(), b = random_config(), c = random_config();
    double ab = config_distance(a, b), ba = config_distance(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_EQ(ab == 0.0, a == b);
    EXPECT_LE(config_distance(a, c), ab + config_distance(b, c));
  }
}

}  // namespace
