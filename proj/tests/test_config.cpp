#include <adlstm/config.hpp>

#include <gtest/gtest.h>

#include <map>
#include <sstream>

using namespace adlstm;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig cfg;
  std::istringstream in(config_text(cfg));
  RunConfig back;
  back.engine.hidden = 99;
  read_config(in, back);
  EXPECT_EQ(back, cfg);
}

TEST(Config, ModifiedRoundTripIsLossless) {
  RunConfig cfg;
  cfg.seed = 18446744073709551615ULL;
  cfg.engine.hidden = 16;
  cfg.engine.learning_rate = 0.1 + 0.2;
  cfg.drift_start = 556;
  cfg.drift_bias = 1.0 / 3.0;
  cfg.sweep_hidden_units = {8, 32};
  cfg.start_date = parse_date("2011-07-09");
  cfg.stream_path = "s.csv";
  std::istringstream in(config_text(cfg));
  RunConfig back;
  read_config(in, back);
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(config_text(back), config_text(cfg));
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  EXPECT_NE(config_hash(back), config_hash(RunConfig{}));
  EXPECT_EQ(config_hash(cfg).size(), 16u);
}

TEST(Config, CommentsAndErrors) {
  RunConfig cfg;
  std::istringstream ok("# run\nformat_version = 1\n\n  hidden = 8  \n");
  read_config(ok, cfg);
  EXPECT_EQ(cfg.engine.hidden, 8u);

  for (const std::string bad : {"hidden = 8\n", "format_version = 2\n", "format_version = 1\nnope = 1\n",
                                "format_version = 1\nhidden = -1\n", "format_version = 1\nhidden\n",
                                "format_version = 1\nlearning_rate = abc\n"}) {
    std::istringstream in(bad);
    RunConfig c;
    try {
      read_config(in, c);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::configuration) << bad;
    }
  }
}

TEST(Config, ValidateRejectsZeroCounts) {
  RunConfig cfg;
  cfg.engine.hidden = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.engine.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.engine.c_max = 0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_NO_THROW(RunConfig{}.validate());
}

TEST(Config, EnvironmentOverridesFile) {
  RunConfig cfg;
  std::istringstream in("format_version = 1\nhidden = 8\nseed = 4\n");
  read_config(in, cfg);
  const std::map<std::string, std::string> env{{"ADLSTM_HIDDEN", "32"}, {"ADLSTM_DRIFT_START", "none"}};
  apply_environment(cfg, [&](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  EXPECT_EQ(cfg.engine.hidden, 32u);
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_FALSE(cfg.drift_start);
  set_config_value(cfg, "hidden", "64");
  EXPECT_EQ(cfg.engine.hidden, 64u);
}
