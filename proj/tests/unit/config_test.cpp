#include <gtest/gtest.h>

#include "ahtm/config.hpp"
#include "ahtm/error.hpp"

using namespace ahtm;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Settings, ParsesKeyValueLinesAndComments) {
  const auto s = parse_settings("# header\nsp.k = 20\n\n  cu.window=8  # trailing\n");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.at("sp.k"), "20");
  EXPECT_EQ(s.at("cu.window"), "8");
}

TEST(Settings, RepeatedIdenticalKeysAreAccepted) {
  EXPECT_NO_THROW(parse_settings("sp.k = 20\nsp.k = 20\n"));
}

TEST(Settings, ConflictingDuplicatesNameTheKey) {
  const auto msg = message_of([] { parse_settings("sp.k = 20\nsp.k = 30\ncu.window = 2\ncu.window = 3\n"); });
  EXPECT_NE(msg.find("conflicting values for keys: cu.window, sp.k"), std::string::npos) << msg;
}

TEST(Settings, MalformedLineReportsLocation) {
  const auto msg = message_of([] { parse_settings("sp.k 20\n", "run.cfg"); });
  EXPECT_NE(msg.find("run.cfg:1"), std::string::npos) << msg;
}

TEST(Settings, ApplyUpdatesConfig) {
  PipelineConfig cfg;
  apply_settings(cfg, parse_settings(
                          "mode = htm\nsp.k = 30\ncu.pin = sm\nrm.layout = keyed\nencoder.min = -1\nencoder.max = 1\n"));
  EXPECT_EQ(cfg.mode, Mode::HTM);
  EXPECT_EQ(cfg.sp.k, 30u);
  EXPECT_EQ(cfg.cu.pin, Memory::SM);
  EXPECT_EQ(cfg.rm.layout, ReflexLayout::Keyed);
  EXPECT_DOUBLE_EQ(cfg.encoder.min_value, -1.0);
  EXPECT_FALSE(cfg.encoder_auto_range);
}

TEST(Settings, ApplyCollectsEveryProblem) {
  PipelineConfig cfg;
  const PipelineConfig before = cfg;
  const auto msg = message_of([&] {
    apply_settings(cfg, parse_settings("sp.kk = 3\nsm.theta = high\ncu.pin = both\nencoder.min = 0\n"));
  });
  EXPECT_NE(msg.find("unknown keys: sp.kk"), std::string::npos) << msg;
  EXPECT_NE(msg.find("sm.theta=high"), std::string::npos) << msg;
  EXPECT_NE(msg.find("cu.pin=both"), std::string::npos) << msg;
  EXPECT_NE(msg.find("encoder.min and encoder.max"), std::string::npos) << msg;
  EXPECT_EQ(cfg.sp.k, before.sp.k);
}

TEST(Settings, ApplyRunsConfigValidation) {
  PipelineConfig cfg;
  EXPECT_THROW(apply_settings(cfg, parse_settings("sp.k = 5000\n")), ValidationError);
  EXPECT_THROW(apply_settings(cfg, parse_settings("mode = h_ahtm\ncam.n = 64\n")), ValidationError);
}

TEST(Settings, RoundTripThroughSettings) {
  PipelineConfig cfg = toy_pipeline_config(Mode::H_AHTM);
  cfg.cu.window = 16;
  cfg.sm.perm_inc = 0.125;
  PipelineConfig back;
  apply_settings(back, to_settings(cfg));
  EXPECT_EQ(to_settings(back), to_settings(cfg));
  for (const auto& [k, v] : to_settings(cfg)) {
    const auto keys = known_config_keys();
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
}

TEST(Settings, MissingFileIsAnIoError) { EXPECT_THROW(load_settings("/nonexistent/ahtm.cfg"), IoError); }
