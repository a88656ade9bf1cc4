#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "ahtm/cam.hpp"
#include "ahtm/error.hpp"
#include "test_support.hpp"

using namespace ahtm;

namespace {

// 16-bit words, 8 rows, 4-bit confidence.
CamGeometry small() { return CamGeometry{4, 2, 3, 4, 4}; }

Sdr word(std::initializer_list<BitIndex> bits) { return Sdr(16, bits); }

}  // namespace

TEST(CamGeometry, DefaultShape) {
  const CamGeometry g;
  EXPECT_EQ(g.word_bits(), 1024u);
  EXPECT_EQ(g.rows(), 2048u);
  EXPECT_EQ(g.confidence_max(), 255u);
  EXPECT_NO_THROW(g.validate());
}

TEST(CamGeometry, RejectsInvalidShapes) {
  EXPECT_THROW((CamGeometry{0, 1, 3, 1, 1}.validate()), ValidationError);
  EXPECT_THROW((CamGeometry{1, 1, 2, 1, 1}.validate()), ValidationError);
  EXPECT_THROW((CamGeometry{1, 1, 3, 1, 17}.validate()), ValidationError);
}

TEST(CostLedger, UnitCostsPerOperation) {
  CamArray cam;
  cam.write(CamStage::Present, 0, Sdr(1024, {1, 2, 3}));
  EXPECT_DOUBLE_EQ(cam.ledger().latency_ns(CamOp::Write), 20.0);
  EXPECT_NEAR(cam.ledger().energy_fj(CamOp::Write), 163.84, 1e-9);

  CostLedger l;
  l.charge(CamOp::Search, 1000);
  l.charge(CamOp::Update, 1000);
  l.charge(CamOp::MinMax, 1000);
  l.charge(CamOp::Predict, 1000);
  EXPECT_DOUBLE_EQ(l.latency_ns(CamOp::Search), 0.25);
  EXPECT_NEAR(l.energy_fj(CamOp::Search), 220.0, 1e-9);
  EXPECT_DOUBLE_EQ(l.latency_ns(CamOp::Update), 20.25);
  EXPECT_NEAR(l.energy_fj(CamOp::Update), 540.0, 1e-9);
  EXPECT_DOUBLE_EQ(l.latency_ns(CamOp::MinMax), 1.2);
  EXPECT_NEAR(l.energy_fj(CamOp::MinMax), 1760.0, 1e-9);
  EXPECT_DOUBLE_EQ(l.latency_ns(CamOp::Predict), 2.3);
  EXPECT_NEAR(l.energy_fj(CamOp::Predict), 1760.0, 1e-9);
  EXPECT_NEAR(l.latency_ns(), 0.25 + 20.25 + 1.2 + 2.3, 1e-12);
  EXPECT_NEAR(l.energy_fj(), 220.0 + 540.0 + 1760.0 + 1760.0, 1e-9);
}

TEST(CostLedger, JsonTotals) {
  CostLedger l;
  l.charge(CamOp::Search, 8);
  l.charge(CamOp::Search, 8);
  const auto j = l.to_json();
  EXPECT_EQ(j["operations"]["search"]["count"], 2);
  EXPECT_EQ(j["operations"]["search"]["bits"], 16);
  EXPECT_NEAR(j["total_latency_ns"].get<double>(), 0.5, 1e-12);
}

TEST(CamArray, SearchMatchesOnlyExactValidRows) {
  CamArray cam(small());
  cam.write(CamStage::Present, 0, word({1, 2}));
  cam.write(CamStage::Present, 3, word({1, 2}));
  cam.write(CamStage::Present, 5, word({1, 2, 3}));
  const auto r = cam.search(CamStage::Present, word({1, 2}));
  EXPECT_FALSE(r.miss);
  EXPECT_EQ(r.rows(), (std::vector<std::uint32_t>{0, 3}));
  EXPECT_TRUE(cam.search(CamStage::Present, word({2})).miss);
  EXPECT_EQ(cam.ledger().count(CamOp::Search), 2u);
  EXPECT_EQ(cam.ledger().bits(CamOp::Search), 32u);
}

TEST(CamArray, SearchAgreesWithLinearScan) {
  std::mt19937_64 rng(3);
  CamArray cam(small());
  std::vector<std::optional<Sdr>> stored(8);
  std::uniform_int_distribution<std::uint32_t> row(0, 7);
  for (int i = 0; i < 2000; ++i) {
    const Sdr w = fixture::random_sdr(16, 2, rng);
    if (i % 3 == 0) {
      const auto r = row(rng);
      cam.write(CamStage::Present, r, w);
      stored[r] = w;
    } else {
      std::vector<std::uint32_t> expected;
      for (std::uint32_t r = 0; r < 8; ++r) {
        if (stored[r] && *stored[r] == w) expected.push_back(r);
      }
      ASSERT_EQ(cam.search(CamStage::Present, w).rows(), expected);
    }
  }
}

TEST(CamArray, SearchPairRequiresBothStages) {
  CamArray cam(small());
  cam.write(CamStage::Present, 0, word({1}));
  cam.write(CamStage::Next, 0, word({2}));
  cam.write(CamStage::Present, 1, word({1}));
  cam.write(CamStage::Next, 1, word({3}));
  EXPECT_EQ(cam.search_pair(word({1}), word({3})).rows(), (std::vector<std::uint32_t>{1}));
  EXPECT_EQ(cam.ledger().count(CamOp::Search), 2u);
}

TEST(CamArray, MinMaxExhaustiveAgainstScan) {
  // All confidence assignments of three rows with Q=3, every candidate subset.
  const CamGeometry g{2, 1, 3, 3, 3};
  for (std::uint32_t a = 0; a < 8; ++a) {
    for (std::uint32_t b = 0; b < 8; ++b) {
      for (std::uint32_t c = 0; c < 8; ++c) {
        CamArray cam(g);
        const std::uint32_t conf[3] = {a, b, c};
        for (std::uint32_t r = 0; r < 3; ++r) cam.write_confidence(r, conf[r]);
        for (std::uint32_t mask = 1; mask < 8; ++mask) {
          std::vector<std::uint32_t> cand;
          for (std::uint32_t r = 0; r < 3; ++r) {
            if (mask & (1u << r)) cand.push_back(r);
          }
          std::uint32_t best_max = cand.front(), best_min = cand.front();
          for (std::uint32_t r : cand) {
            if (conf[r] > conf[best_max]) best_max = r;
            if (conf[r] < conf[best_min]) best_min = r;
          }
          ASSERT_EQ(cam.minmax(cand, MinMaxMode::Max), best_max);
          ASSERT_EQ(cam.minmax(cand, MinMaxMode::Min), best_min);
        }
      }
    }
  }
}

TEST(CamArray, MinMaxChargesQBitsPerCandidate) {
  CamArray cam(small());
  for (std::uint32_t r = 0; r < 4; ++r) cam.write_confidence(r, r + 1);
  const std::vector<std::uint32_t> cand{0, 1, 2, 3};
  EXPECT_EQ(cam.minmax(cand, MinMaxMode::Max), 3u);
  EXPECT_EQ(cam.ledger().count(CamOp::MinMax), 1u);
  EXPECT_EQ(cam.ledger().bits(CamOp::MinMax), 16u);
  EXPECT_THROW(cam.minmax({}, MinMaxMode::Max), ContractViolation);
}

TEST(CamArray, PredictReadsNextWordInQCycles) {
  CamArray cam(small());
  const Sdr next = word({0, 5, 7, 15});
  cam.write(CamStage::Present, 2, word({1}));
  cam.write(CamStage::Next, 2, next);
  EXPECT_EQ(cam.predict(2), next);
  EXPECT_EQ(cam.ledger().predict_cycles(), 4u);
  EXPECT_EQ(cam.ledger().bits(CamOp::Predict), 16u);
  EXPECT_THROW(cam.predict(3), AddressError);
}

TEST(CamArray, UpdateClearsAndInvalidates) {
  CamArray cam(small());
  cam.write(CamStage::Present, 1, word({4}));
  cam.write(CamStage::Next, 1, word({6}));
  cam.write_confidence(1, 9);
  cam.update(1);
  EXPECT_FALSE(cam.valid(1));
  EXPECT_EQ(cam.confidence(1), 0u);
  EXPECT_TRUE(cam.peek(CamStage::Present, 1).empty());
  EXPECT_TRUE(cam.search(CamStage::Present, word({4})).miss);
  EXPECT_EQ(cam.ledger().bits(CamOp::Update), 2u * 16u + 4u);
  EXPECT_THROW(cam.update(1), AddressError);
}

TEST(CamArray, RejectsBadAddressesAndValues) {
  CamArray cam(small());
  EXPECT_THROW(cam.write(CamStage::Present, 8, word({1})), AddressError);
  EXPECT_THROW(cam.write(CamStage::Present, 0, Sdr(15, {1})), ContractViolation);
  EXPECT_THROW(cam.write_confidence(0, 16), ContractViolation);
}

TEST(CamReflexBackend, UniqueMatchBypassesMinMax) {
  CamReflexBackend rm(small());
  rm.observe(word({1}), word({2}));
  const CostLedger before = rm.ledger();
  EXPECT_EQ(rm.lookup_predict(word({1})), word({2}));
  const CostLedger& after = rm.ledger();
  EXPECT_EQ(after.count(CamOp::Search) - before.count(CamOp::Search), 1u);
  EXPECT_EQ(after.count(CamOp::Predict) - before.count(CamOp::Predict), 1u);
  EXPECT_EQ(after.count(CamOp::MinMax), before.count(CamOp::MinMax));
}

TEST(CamReflexBackend, MultipleMatchesUseMinMax) {
  CamReflexBackend rm(small());
  rm.observe(word({1}), word({2}));
  rm.observe(word({1}), word({3}));
  rm.observe(word({1}), word({3}));
  EXPECT_EQ(rm.lookup_predict(word({1})), word({3}));
  EXPECT_EQ(rm.ledger().count(CamOp::MinMax), 1u);
}

TEST(CamReflexBackend, CapacityBoundsAndEviction) {
  CamReflexBackend rm(small(), 3);
  for (std::uint32_t i = 0; i < 6; ++i) rm.observe(word({i}), word({i + 1}));
  EXPECT_EQ(rm.size(), 3u);
  EXPECT_EQ(rm.stats().evictions, 3u);
  EXPECT_THROW(CamReflexBackend(small(), 9), ValidationError);
}

TEST(CamReflexBackend, MatchesRowPerPairTableUnderRandomTraffic) {
  const CamGeometry g{8, 2, 3, 32, 8};
  CamReflexBackend cam(g, 40);
  ReflexTable table({40, ReflexLayout::RowPerPair, 255});
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::uint32_t> symbol(0, 30), op(0, 9);
  auto sdr = [&](std::uint32_t s) { return Sdr(g.word_bits(), {s, s + 31}); };
  for (int i = 0; i < 5000; ++i) {
    const Sdr a = sdr(symbol(rng));
    const Sdr b = sdr(symbol(rng));
    const auto o = op(rng);
    if (o < 3) {
      ASSERT_EQ(cam.lookup_predict(a), table.lookup_predict(a)) << "op " << i;
    } else if (o < 9) {
      ASSERT_EQ(cam.observe(a, b), table.observe(a, b)) << "op " << i;
    } else {
      ASSERT_EQ(cam.decrement(a, b), table.decrement(a, b)) << "op " << i;
    }
    ASSERT_EQ(cam.size(), table.size());
  }
  EXPECT_EQ(cam.stats(), table.stats());
}

TEST(CamReflexBackend, MappedStepClaimsRowOnMissAndPredictsOnHit) {
  CamReflexBackend rm(small());
  EXPECT_FALSE(rm.rm_step_mapped(word({1}), std::nullopt).has_value());
  EXPECT_EQ(rm.size(), 1u);
  EXPECT_TRUE(rm.pending(0));
  EXPECT_FALSE(rm.rm_step_mapped(word({1}), word({2})).has_value());
  EXPECT_FALSE(rm.pending(0));
  EXPECT_EQ(rm.rm_step_mapped(word({1}), std::nullopt), word({2}));
}
