#include <gtest/gtest.h>

#include <random>

#include "ahtm/error.hpp"
#include "ahtm/spatial_pooler.hpp"
#include "test_support.hpp"

using namespace ahtm;

namespace {

PermanenceMatrix toy_matrix(const std::vector<std::vector<float>>& perms, double threshold = 0.2) {
  const auto cols = static_cast<std::uint32_t>(perms.size());
  const auto width = static_cast<std::uint32_t>(perms.front().size());
  PermanenceMatrix m(cols, width, threshold);
  for (std::uint32_t c = 0; c < cols; ++c) {
    std::vector<BitIndex> all(width);
    std::iota(all.begin(), all.end(), BitIndex{0});
    m.set_pool(c, all);
    for (BitIndex b = 0; b < width; ++b) m.set_permanence(c, b, perms[c][b]);
  }
  return m;
}

}  // namespace

TEST(SpatialPooler, LearnRuleMatchesHandTable) {
  PermanenceMatrix m = toy_matrix({
      {0.5f, 0.25f, 0.0f, 1.0f},
      {0.5f, 0.75f, 0.9375f, 0.25f},
      {0.125f, 0.5f, 1.0f, 0.0625f},
  });
  learn(m, Sdr(4, {0, 2}), Sdr(3, {1}), 0.125);
  const std::vector<std::vector<float>> expect = {
      {0.375f, 0.25f, 0.0f, 1.0f},
      {0.625f, 0.75f, 1.0f, 0.25f},
      {0.0f, 0.5f, 0.875f, 0.0625f},
  };
  for (std::uint32_t c = 0; c < 3; ++c) {
    for (BitIndex b = 0; b < 4; ++b) EXPECT_EQ(m.permanence(c, b), expect[c][b]) << c << "," << b;
  }
}

TEST(SpatialPooler, LearnLeavesUnpooledSynapsesAlone) {
  PermanenceMatrix m(2, 4, 0.2);
  m.set_pool(0, {0, 1});
  m.set_pool(1, {2, 3});
  m.set_permanence(0, 0, 0.5f);
  m.set_permanence(1, 2, 0.5f);
  learn(m, Sdr(4, {0, 1, 2, 3}), Sdr(2, {0}), 0.25);
  EXPECT_EQ(m.permanence(0, 0), 0.75f);
  EXPECT_EQ(m.permanence(1, 2), 0.25f);
  EXPECT_EQ(m.permanence(0, 2), 0.0f);
  EXPECT_FALSE(m.in_pool(0, 3));
  EXPECT_THROW(m.set_permanence(0, 3, 0.5f), ContractViolation);
}

TEST(SpatialPooler, OverlapCountsConnectedActiveBits) {
  const PermanenceMatrix m = toy_matrix({
      {0.2f, 0.19f, 0.9f, 0.0f},
      {1.0f, 1.0f, 1.0f, 1.0f},
  });
  EXPECT_EQ(overlap_scores(m, Sdr(4, {0, 1, 2})), (std::vector<std::uint32_t>{2, 3}));
  const auto w = weighted_overlap_scores(m, Sdr(4, {0, 2}));
  EXPECT_DOUBLE_EQ(w[0], static_cast<double>(0.2f) + static_cast<double>(0.9f));
  EXPECT_DOUBLE_EQ(w[1], 2.0);
}

TEST(SpatialPooler, OverlapMatchesBruteForce) {
  SpConfig cfg;
  cfg.columns = 64;
  const auto m = PermanenceMatrix::init(cfg, 128, 9);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const Sdr e = fixture::random_sdr(128, 12, rng);
    const auto scores = overlap_scores(m, e);
    for (std::uint32_t c = 0; c < 64; ++c) {
      std::uint32_t expect = 0;
      for (BitIndex b : e.active()) expect += m.connected(c, b) ? 1 : 0;
      ASSERT_EQ(scores[c], expect);
    }
  }
}

TEST(SpatialPooler, KwtaBreaksTiesTowardLowIndex) {
  const std::vector<std::uint32_t> scores = {3, 5, 5, 1, 5, 3};
  EXPECT_EQ(kwta_select(scores, 2), Sdr(6, {1, 2}));
  EXPECT_EQ(kwta_select(scores, 4), Sdr(6, {0, 1, 2, 4}));
  EXPECT_EQ(kwta_select(std::vector<std::uint32_t>(8, 0), 3), Sdr(8, {0, 1, 2}));
  EXPECT_THROW(kwta_select(scores, 7), ContractViolation);
}

TEST(SpatialPooler, KwtaMatchesSortOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint32_t> small(0, 6);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint32_t> scores(50);
    for (auto& s : scores) s = small(rng);
    std::vector<BitIndex> order(50);
    std::iota(order.begin(), order.end(), BitIndex{0});
    std::stable_sort(order.begin(), order.end(), [&](BitIndex a, BitIndex b) { return scores[a] > scores[b]; });
    order.resize(7);
    ASSERT_EQ(kwta_select(scores, 7), Sdr(50, order));
  }
}

TEST(SpatialPooler, InitIsSeededAndPoolsHaveConfiguredSize) {
  SpConfig cfg;
  cfg.columns = 32;
  const auto a = PermanenceMatrix::init(cfg, 100, 11);
  const auto b = PermanenceMatrix::init(cfg, 100, 11);
  const auto c = PermanenceMatrix::init(cfg, 100, 12);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  for (std::uint32_t col = 0; col < 32; ++col) {
    EXPECT_EQ(a.pool(col).size(), 50u);
    for (BitIndex bit : a.pool(col)) {
      EXPECT_GE(a.permanence(col, bit), 0.0f);
      EXPECT_LE(a.permanence(col, bit), 1.0f);
    }
  }
}

TEST(SpatialPooler, PoolOutputHasExactlyKColumns) {
  SpConfig cfg;
  cfg.columns = 128;
  cfg.k = 6;
  SpatialPooler sp(cfg, 64);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const Sdr out = sp.pool(fixture::random_sdr(64, 8, rng), true);
    ASSERT_EQ(out.size(), 6u);
    ASSERT_EQ(out.width(), 128u);
  }
}

TEST(SpatialPooler, LearningOffLeavesMatrixUntouched) {
  SpConfig cfg;
  cfg.columns = 64;
  cfg.k = 4;
  SpatialPooler sp(cfg, 64);
  const PermanenceMatrix before = sp.matrix();
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) sp.pool(fixture::random_sdr(64, 8, rng), false);
  EXPECT_TRUE(sp.matrix() == before);
}

TEST(SpatialPooler, WidthMismatchIsAContractViolation) {
  SpConfig cfg;
  cfg.columns = 16;
  cfg.k = 2;
  SpatialPooler sp(cfg, 32);
  EXPECT_THROW(sp.pool(Sdr(33, {1}), true), ContractViolation);
}

TEST(SpatialPooler, ConfigValidation) {
  SpConfig cfg;
  cfg.k = cfg.columns + 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.pool_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}
