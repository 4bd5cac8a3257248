#include <adlstm/drift.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace adlstm;

namespace {

std::vector<DriftEvent> run(SdwinState& s, const Threshold& th, const std::vector<double>& errors) {
  std::vector<DriftEvent> out;
  for (double e : errors) {
    out.push_back(sdwin_step(s, th, {{}, e}));
    if (out.back() == DriftEvent::drift_confirmed) break;
  }
  return out;
}

}  // namespace

TEST(BatchError, Cases) {
  std::vector<double> f(24, 0.3), o(24, 0.3);
  EXPECT_EQ(batch_error(f, o).value, 0.0);
  for (auto& v : f) v += 0.1;
  EXPECT_NEAR(batch_error(f, o).value, 0.01, 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& v : f) v = u(rng);
  for (auto& v : o) v = u(rng);
  double s = 0;
  for (int h = 0; h < 24; ++h) s += (f[h] - o[h]) * (f[h] - o[h]);
  EXPECT_NEAR(batch_error(f, o).value, s / 24, 1e-12);
  try {
    batch_error(std::span(f).first(23), std::span(o).first(23));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(Threshold, Cases) {
  const std::vector<double> same(10, 0.02);
  const auto t = estimate_threshold(same);
  EXPECT_DOUBLE_EQ(t.value, 0.02);
  const std::vector<double> two{0.0, 0.02};
  const auto t2 = estimate_threshold(two);
  EXPECT_DOUBLE_EQ(t2.mean, 0.01);
  EXPECT_DOUBLE_EQ(t2.stddev, 0.01);
  EXPECT_DOUBLE_EQ(t2.value, 0.04);
  try {
    estimate_threshold(std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_history);
  }
}

TEST(Threshold, MatchesTwoPassOracle) {
  std::mt19937_64 rng(7);
  std::gamma_distribution<double> g(2.0, 0.001);
  std::vector<double> errs(90);
  for (auto& e : errs) e = g(rng);
  const auto t = estimate_threshold(errs);
  EXPECT_NEAR(t.mean, oracle::mean(errs), 1e-12);
  EXPECT_NEAR(t.stddev, oracle::population_std(errs), 1e-12);
  EXPECT_GE(t.value, t.mean);
}

TEST(Sdwin, BelowThresholdForever) {
  SdwinState s;
  const Threshold th{0, 0, 1.0};
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(sdwin_step(s, th, {{}, 0.5}), DriftEvent::none);
    EXPECT_EQ(s.confidence, 0u);
  }
}

TEST(Sdwin, ThreeExceedancesConfirm) {
  SdwinState s(3);
  const Threshold th{0, 0, 1.0};
  EXPECT_EQ(run(s, th, {2, 2, 2}),
            (std::vector<DriftEvent>{DriftEvent::warning, DriftEvent::warning, DriftEvent::drift_confirmed}));
  EXPECT_EQ(s.status, DriftStatus::drift_confirmed);
  EXPECT_EQ(s.confidence, 3u);
  try {
    sdwin_step(s, th, {{}, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::state_machine);
  }
}

TEST(Sdwin, BelowResetsAndClears) {
  SdwinState s(3);
  const Threshold th{0, 0, 1.0};
  EXPECT_EQ(run(s, th, {2, 2, 0.5}),
            (std::vector<DriftEvent>{DriftEvent::warning, DriftEvent::warning, DriftEvent::cleared}));
  EXPECT_EQ(s.confidence, 0u);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Sdwin, EqualIsNotExceedance) {
  SdwinState s(1);
  EXPECT_EQ(sdwin_step(s, {0, 0, 1.0}, {{}, 1.0}), DriftEvent::none);
}

TEST(Sdwin, ResetBehaviour) {
  const Threshold th{0, 0, 1.0};
  SdwinState s(2);
  const std::vector<double> seq{0, 2, 0, 2, 2};
  const auto first = run(s, th, seq);
  reset(s);
  EXPECT_EQ(s.status, DriftStatus::monitoring);
  EXPECT_EQ(s.confidence, 0u);
  EXPECT_EQ(run(s, th, seq), first);

  SdwinState fresh(2), reset_fresh(2);
  reset(reset_fresh);
  EXPECT_EQ(run(fresh, th, seq), run(reset_fresh, th, seq));
  EXPECT_THROW(SdwinState(0), Error);
}

TEST(Sdwin, MatchesBruteForceOnRandomSequences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c_max = 1 + trial % 4;
    std::vector<double> errs(1 + trial % 15);
    for (auto& e : errs) e = u(rng);
    SdwinState s(c_max);
    EXPECT_EQ(run(s, {0, 0, 1.0}, errs), oracle::sdwin(errs, 1.0, c_max));
  }
}

TEST(Sdwin, MonotoneTrigger) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> errs(10);
    for (auto& e : errs) e = u(rng);
    SdwinState a(3);
    const bool detected = run(a, {0, 0, 1.0}, errs).back() == DriftEvent::drift_confirmed;
    if (!detected) continue;
    for (auto& e : errs) e += u(rng);
    SdwinState b(3);
    EXPECT_EQ(run(b, {0, 0, 1.0}, errs).back(), DriftEvent::drift_confirmed);
  }
}

TEST(DriftLog, Format) {
  std::ostringstream out;
  const std::vector<DriftLogEntry> log{{parse_date("2014-01-02"), 0.5, 0.25, 1, DriftEvent::warning}};
  write_drift_log(out, log);
  EXPECT_EQ(out.str(), "date,E_j,E_th,C,event\n2014-01-02,0.5,0.25,1,warning\n");
}
