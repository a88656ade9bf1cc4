#include <gtest/gtest.h>

#include <random>

#include "ahtm/error.hpp"
#include "ahtm/metrics.hpp"
#include "test_support.hpp"

using namespace ahtm;

TEST(Ars, MatchesDenseOracle) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    const Sdr p = fixture::random_sdr(200, 15, rng);
    const Sdr a = fixture::random_sdr(200, 10, rng);
    ASSERT_NEAR(ars(p, a), fixture::dense_ars(p, a), 1e-12);
  }
}

TEST(Ars, BoundaryCases) {
  const Sdr a(8, {1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(ars(a, a), 0.0);
  EXPECT_DOUBLE_EQ(ars(Sdr(8), a), 1.0);
  EXPECT_DOUBLE_EQ(ars(Sdr(8, {1, 5}), a), 0.75);
  EXPECT_THROW(ars(a, Sdr(8)), UndefinedScore);
  EXPECT_THROW(ars(Sdr(9, {1}), a), ContractViolation);
}

TEST(IsMatch, HalfCoverageIsAMatch) {
  const Sdr a(16, {0, 1, 2, 3});
  EXPECT_TRUE(is_match(Sdr(16, {0, 1}), a));
  EXPECT_FALSE(is_match(Sdr(16, {0, 9}), a));
  const Sdr odd(16, {0, 1, 2});
  EXPECT_FALSE(is_match(Sdr(16, {0}), odd));
  EXPECT_TRUE(is_match(Sdr(16, {0, 1}), odd));
}

TEST(RocAuc, PerfectAndInvertedRankings) {
  const std::vector<double> scores{0.9, 0.8, 0.1, 0.2};
  const std::vector<std::uint8_t> labels{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(*roc_auc(scores, labels), 1.0);
  const std::vector<std::uint8_t> inverted{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(*roc_auc(scores, inverted), 0.0);
}

TEST(RocAuc, TiesCountHalf) {
  const std::vector<double> scores{0.5, 0.5};
  const std::vector<std::uint8_t> labels{1, 0};
  EXPECT_DOUBLE_EQ(*roc_auc(scores, labels), 0.5);
}

TEST(RocAuc, MatchesPairwiseCountingOracle) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> level(0, 5);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<std::uint8_t> l;
    for (int i = 0; i < 60; ++i) {
      s.push_back(level(rng) / 5.0);
      l.push_back(coin(rng) ? 1 : 0);
    }
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (l[i] != 1 || l[j] != 0) continue;
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
    const auto auc = roc_auc(s, l);
    if (pairs == 0.0) {
      EXPECT_FALSE(auc.has_value());
    } else {
      ASSERT_NEAR(*auc, wins / pairs, 1e-12);
    }
  }
}

TEST(RocAuc, RandomScoresNearHalf) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (int i = 0; i < 20000; ++i) {
    s.push_back(u(rng));
    l.push_back(coin(rng) ? 1 : 0);
  }
  EXPECT_NEAR(*roc_auc(s, l), 0.5, 0.05);
}

TEST(RocAuc, UndefinedWithoutBothClasses) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<std::uint8_t> l{0, 0};
  EXPECT_FALSE(roc_auc(s, l).has_value());
}

TEST(ClassificationMetrics, ConfusionFromMismatches) {
  std::vector<ArsRecord> r(6);
  const bool matched[] = {true, false, false, true, true, false};
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i].step = i;
    r[i].matched = matched[i];
    r[i].ars_emitted = matched[i] ? 0.0 : 1.0;
  }
  const std::vector<std::uint8_t> labels{0, 1, 0, 0, 1, 1};
  const auto m = classification_metrics(r, labels);
  EXPECT_EQ(m.confusion.tp, 2u);
  EXPECT_EQ(m.confusion.fp, 1u);
  EXPECT_EQ(m.confusion.fn, 1u);
  EXPECT_EQ(m.confusion.tn, 2u);
  EXPECT_DOUBLE_EQ(*m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*m.f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.match_rate, 0.5);
}

TEST(ClassificationMetrics, UndefinedRatiosAreEmpty) {
  std::vector<ArsRecord> r(3);
  for (auto& x : r) x.matched = true;
  const std::vector<std::uint8_t> labels{0, 0, 0};
  const auto m = classification_metrics(r, labels);
  EXPECT_FALSE(m.precision.has_value());
  EXPECT_FALSE(m.recall.has_value());
  EXPECT_FALSE(m.f1.has_value());
  EXPECT_FALSE(m.roc_auc.has_value());
  EXPECT_DOUBLE_EQ(m.match_rate, 1.0);
}

TEST(TimingStats, NearestRankPercentiles) {
  std::vector<double> d;
  for (int i = 1; i <= 100; ++i) d.push_back(i);
  const auto t = timing_stats(d, 2);
  EXPECT_EQ(t.samples, 100u);
  EXPECT_DOUBLE_EQ(t.mean_ms, 50.5);
  EXPECT_DOUBLE_EQ(t.p50_ms, 50.0);
  EXPECT_DOUBLE_EQ(t.p95_ms, 95.0);
  EXPECT_DOUBLE_EQ(t.total_ms, 2525.0);
  EXPECT_THROW(timing_stats({}), ContractViolation);
}
