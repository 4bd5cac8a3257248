// End-to-end runs of the command-line tool on a small synthetic data set.

#include <adlstm/adlstm.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace adlstm;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("adlstm_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "cd '" + workdir().string() + "' && '" ADLSTM_CLI_PATH "' " + args + " > last.log 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(workdir() / p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> summary(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

// 15 months of history plus about 60 stream days; drift starts on stream day 20.
constexpr const char* kConfig =
    "format_version = 1\n"
    "generate_months = 17\n"
    "epochs = 20\n"
    "finetune_epochs = 5\n"
    "drift_bias = 0.5\n";

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    std::ofstream(workdir() / "run.cfg") << kConfig;
    ASSERT_EQ(run("generate --config run.cfg --data plain.csv"), 0) << slurp("last.log");
    ASSERT_EQ(run("generate --config run.cfg --data drift.csv --drift-start 477"), 0);
    ASSERT_EQ(run("pretrain --config run.cfg --data plain.csv --checkpoint m.ckpt --out pre"), 0) << slurp("last.log");
  }
};

}  // namespace

TEST_F(Cli, GenerateIsDeterministicAndTwinDiffersOnlyInPvpg) {
  ASSERT_EQ(run("generate --config run.cfg --data plain2.csv"), 0);
  EXPECT_EQ(slurp("plain.csv"), slurp("plain2.csv"));
  const auto a = ingest_csv((workdir() / "plain.csv").string()).records;
  const auto b = ingest_csv((workdir() / "drift.csv").string()).records;
  const SynthOptions so;
  EXPECT_EQ(a.size(), static_cast<std::size_t>((add_months(so.start, 17) - so.start).count()) * 24);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].features, b[k].features);
    if (k / 24 < 477) {
      EXPECT_EQ(a[k].pvpg, b[k].pvpg);
    }
  }
}

TEST_F(Cli, PretrainTraceAndCheckpoint) {
  std::istringstream trace(slurp("pre/pretrain_trace.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(trace, line);
  EXPECT_EQ(line, "epoch,train,validation");
  while (std::getline(trace, line)) ++rows;
  EXPECT_EQ(rows, 20u);
  std::ifstream ck(workdir() / "m.ckpt");
  const auto m = load_pretrained(ck);
  EXPECT_EQ(m.meta.epochs, 20u);
  EXPECT_GE(m.meta.best_epoch, 1u);

  // Recompute the validation loss from the reloaded checkpoint.
  const auto records = ingest_csv((workdir() / "plain.csv").string()).records;
  std::vector<HourlyRecord> history;
  for (const auto& r : records) {
    if (r.ts.day < m.meta.history_end) history.push_back(r);
  }
  const Timeline tl(m.normalizer, history, {});
  const auto samples = make_samples(tl.records(), m.time_step);
  std::vector<SequenceSample> val;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (tl.records()[k].ts.day >= m.meta.train_end) val.push_back(samples[k]);
  }
  EXPECT_EQ(loss(m.params, val), m.meta.best_validation_loss);
}

TEST_F(Cli, TwoEpochSmokePretrainIsQuick) {
  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(run("pretrain --config run.cfg --data plain.csv --checkpoint smoke.ckpt --out smoke --set epochs=2"), 0);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
}

TEST_F(Cli, ReplayReportsAreReproducible) {
  ASSERT_EQ(run("replay --config run.cfg --data drift.csv --checkpoint m.ckpt --out r1"), 0) << slurp("last.log");
  ASSERT_EQ(run("replay --config run.cfg --data drift.csv --checkpoint m.ckpt --out r2"), 0);
  for (const char* f : {"day_report.csv", "baselines.csv", "drift_log.csv", "summary.txt"}) {
    EXPECT_FALSE(slurp(fs::path("r1") / f).empty()) << f;
    EXPECT_EQ(slurp(fs::path("r1") / f), slurp(fs::path("r2") / f)) << f;
  }
  auto kv = summary("r1/summary.txt");
  for (const char* model : {"persistence", "knn", "ol-lstm", "ad-lstm"}) {
    EXPECT_TRUE(kv.count(std::string("case.all.") + model + ".mse")) << model;
  }
  double ol = 0, ad = 0, ir = 0;
  ASSERT_TRUE(parse_double(kv["case.all.ol-lstm.mse"], ol));
  ASSERT_TRUE(parse_double(kv["case.all.ad-lstm.mse"], ad));
  ASSERT_TRUE(parse_double(kv["case.all.improvement_rate_mse"], ir));
  EXPECT_NEAR(ir, (1.0 - ad / ol) * 100.0, 1e-12);
  EXPECT_EQ(kv["drift_confirmations"], "1");

  std::istringstream log(slurp("r1/drift_log.csv"));
  std::string line;
  std::size_t confirmed = 0;
  while (std::getline(log, line)) confirmed += line.ends_with(",drift_confirmed");
  EXPECT_EQ(confirmed, 1u);
}

TEST_F(Cli, NoDriftReplayListsAllModels) {
  ASSERT_EQ(run("replay --config run.cfg --data plain.csv --checkpoint m.ckpt --out r0 --set replay_days=10"), 0);
  auto kv = summary("r0/summary.txt");
  EXPECT_EQ(kv["days"], "10");
  for (const char* model : {"persistence", "knn", "ol-lstm", "ad-lstm"}) {
    EXPECT_TRUE(kv.count(std::string("case.all.") + model + ".r2")) << model;
  }
}

TEST_F(Cli, SweepTableHasSixteenRowsWithProvenance) {
  // The 17-month file covers only two seasonal case days; extend to a full stream year.
  ASSERT_EQ(run("generate --config run.cfg --data long.csv --set generate_months=27"), 0);
  ASSERT_EQ(run("sweep --axis supp_size --config run.cfg --data long.csv --checkpoint m.ckpt --out sw --workers 3"),
            0)
      << slurp("last.log");
  std::istringstream table(slurp("sw/sweep_supp_size.csv"));
  std::string line;
  std::getline(table, line);
  EXPECT_TRUE(line.ends_with(",seed,config_hash"));
  std::size_t rows = 0;
  while (std::getline(table, line)) ++rows;
  EXPECT_EQ(rows, 16u);
  EXPECT_FALSE(slurp("sw/sweep_supp_size_timing.csv").empty());
}

TEST_F(Cli, ErrorsGiveNonZeroExit) {
  EXPECT_NE(run("replay --config run.cfg --set nope=1"), 0);
  EXPECT_NE(run("replay --config missing.cfg"), 0);
  EXPECT_NE(run("pretrain --config run.cfg --data absent.csv"), 0);
  EXPECT_NE(run("replay --config run.cfg --data plain.csv --checkpoint m.ckpt --out bad --set stream_path=plain.csv"),
            0);
  EXPECT_NE(slurp("last.log").find("configuration error"), std::string::npos) << slurp("last.log");
  EXPECT_NE(run("bogus"), 0);
}

TEST_F(Cli, FlagsOverrideEnvironmentOverrideFile) {
  ::setenv("ADLSTM_EPOCHS", "3", 1);
  ASSERT_EQ(run("pretrain --config run.cfg --data plain.csv --checkpoint e.ckpt --out env"), 0);
  ::unsetenv("ADLSTM_EPOCHS");
  std::ifstream ck(workdir() / "e.ckpt");
  EXPECT_EQ(load_pretrained(ck).meta.epochs, 3u);
  ::setenv("ADLSTM_EPOCHS", "3", 1);
  ASSERT_EQ(run("pretrain --config run.cfg --data plain.csv --checkpoint f.ckpt --out env --set epochs=2"), 0);
  ::unsetenv("ADLSTM_EPOCHS");
  std::ifstream ck2(workdir() / "f.ckpt");
  EXPECT_EQ(load_pretrained(ck2).meta.epochs, 2u);
}

TEST_F(Cli, GradcheckPasses) {
  EXPECT_EQ(run("gradcheck --set hidden=3"), 0) << slurp("last.log");
  EXPECT_NE(slurp("last.log").find("PASS"), std::string::npos);
}
