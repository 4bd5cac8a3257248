#include <adlstm/data.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace adlstm;

namespace {

std::string csv_rows(std::size_t hours, const std::string& pvpg_override_at = "", std::size_t at = 0) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  const Date d0 = parse_date("2013-03-01");
  for (std::size_t k = 0; k < hours; ++k) {
    const Timestamp ts{d0 + std::chrono::days{static_cast<long>(k / 24)}, static_cast<int>(k % 24)};
    out << format_timestamp(ts) << ",60," << 280 + k % 7 << ',' << k * 10.0 << ',' << k * 12.0 << ',';
    out << (!pvpg_override_at.empty() && k == at ? pvpg_override_at : std::to_string(0.01 * static_cast<double>(k % 24)))
        << '\n';
  }
  return out.str();
}

HourlyRecord rec(double a, double b, double c, double d) { return {{}, {a, b, c, d}, 0.0}; }

}  // namespace

TEST(Ingest, WellFormedTwoDays) {
  std::istringstream in(csv_rows(48));
  const auto res = ingest_csv(in);
  EXPECT_EQ(res.records.size(), 48u);
  EXPECT_TRUE(res.partial_days.empty());
  EXPECT_EQ(group_days(res.records).days.size(), 2u);
}

TEST(Ingest, NanTargetNamesTheRow) {
  std::istringstream in(csv_rows(48, "NaN", 5));
  try {
    ingest_csv(in, "f.csv");
    FAIL() << "expected an ingestion error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ingestion);
    EXPECT_NE(std::string(e.what()).find("f.csv:7"), std::string::npos) << e.what();
  }
}

TEST(Ingest, RejectsMissingColumnBadNumberAndDuplicate) {
  for (const std::string bad : {"2013-03-01T00:00,1,2,3,4\n", "2013-03-01T00:00,1,2,x,4,0\n",
                                "2013-03-01T00:00,1,2,3,4,0\n2013-03-01T00:00,1,2,3,4,0\n"}) {
    std::istringstream in(std::string(kCsvHeader) + "\n" + bad);
    try {
      ingest_csv(in);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ingestion);
    }
  }
}

TEST(Ingest, RejectsWrongHeader) {
  std::istringstream in("a,b\n");
  EXPECT_THROW(ingest_csv(in), Error);
}

TEST(Ingest, FlagsPartialDay) {
  std::istringstream in(csv_rows(30));
  const auto res = ingest_csv(in);
  ASSERT_EQ(res.partial_days.size(), 1u);
  EXPECT_EQ(group_days(res.records).days.size(), 1u);
}

TEST(Ingest, SyntheticRoundTripCountAndValues) {
  SynthOptions so;
  so.days = static_cast<std::size_t>((add_months(so.start, 27) - so.start).count());
  so.seed = 3;
  const auto gen = synthesize_stream(so);
  std::stringstream buf;
  write_csv(buf, gen);
  const auto back = ingest_csv(buf);
  EXPECT_EQ(back.records.size(), gen.size());
  EXPECT_EQ(back.records, gen);
}

TEST(Grouping, PartitionsRecords) {
  SynthOptions so;
  so.days = 10;
  const auto recs = synthesize_stream(so);
  const auto g = group_days(recs);
  std::set<Timestamp> seen;
  for (const auto& d : g.days) {
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      EXPECT_EQ(d.hours[h].ts.day, d.date);
      EXPECT_TRUE(seen.insert(d.hours[h].ts).second);
    }
  }
  EXPECT_EQ(seen.size(), recs.size());
}

TEST(Normalizer, FitMinMax) {
  const std::vector<HourlyRecord> r = {rec(2, 1, 1, 1), rec(4, 2, 2, 2), rec(10, 3, 3, 3)};
  const auto n = Normalizer::fit(r);
  EXPECT_EQ(n.min()[0], 2.0);
  EXPECT_EQ(n.max()[0], 10.0);
}

TEST(Normalizer, DegenerateFeature) {
  const std::vector<HourlyRecord> r = {rec(5, 1, 1, 1), rec(5, 2, 2, 2), rec(5, 3, 3, 3)};
  try {
    Normalizer::fit(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_feature);
  }
}

TEST(Normalizer, MatchesLinearScanOnSynthetic) {
  SynthOptions so;
  so.days = 120;
  so.seed = 9;
  const auto recs = synthesize_stream(so);
  const auto n = Normalizer::fit(recs);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& r : recs) {
      if (r.features[f] < lo) lo = r.features[f];
      if (r.features[f] > hi) hi = r.features[f];
    }
    EXPECT_EQ(n.min()[f], lo);
    EXPECT_EQ(n.max()[f], hi);
  }
}

TEST(Normalizer, EndpointsAndExtrapolation) {
  const Normalizer n({2, 0, 0, 0}, {10, 1, 1, 1});
  EXPECT_EQ(n.normalize(2.0, Feature::rel_humidity), 0.0);
  EXPECT_EQ(n.normalize(10.0, Feature::rel_humidity), 1.0);
  EXPECT_EQ(n.normalize(18.0, Feature::rel_humidity), 2.0);
  EXPECT_THROW(Normalizer().normalize(1.0, Feature::temperature), Error);
}

TEST(Normalizer, AffineProperty) {
  const Normalizer n({-3, 270, 0, 0}, {100, 310, 3.6e6, 4.6e6});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const auto f = static_cast<Feature>(k % 4);
    const double a = u(rng), b = u(rng), c = u(rng);
    const double lhs = n.normalize(a, f) + n.normalize(b, f) - n.normalize(c, f);
    const double rhs = n.normalize(a + b - c, f);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(Samples, CountsAndPadding) {
  SynthOptions so;
  const auto recs = synthesize_stream(so);
  ASSERT_EQ(recs.size(), 24u);
  const auto s4 = make_samples(recs, 4);
  EXPECT_EQ(s4.size(), 24u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(s4[0].window[k], recs[0].features);
  EXPECT_EQ(s4[2].window[0], recs[0].features);
  EXPECT_EQ(s4[2].window[1], recs[0].features);
  EXPECT_EQ(s4[2].window[2], recs[1].features);
  EXPECT_EQ(s4[10].window[0], recs[7].features);
  EXPECT_EQ(s4[10].window[3], recs[10].features);
  EXPECT_EQ(s4[10].target, recs[10].pvpg);
  const auto s1 = make_samples(recs, 1);
  EXPECT_EQ(s1.size(), recs.size());
  EXPECT_EQ(s1[5].window.size(), 1u);
}

TEST(Samples, Errors) {
  SynthOptions so;
  const auto recs = synthesize_stream(so);
  EXPECT_THROW(make_samples(std::span(recs).first(3), 4), Error);
  EXPECT_THROW(make_samples(recs, 0), Error);
}

TEST(Synth, Deterministic) {
  SynthOptions so;
  so.days = 30;
  so.seed = 11;
  EXPECT_EQ(synthesize_stream(so), synthesize_stream(so));
}

TEST(Synth, DriftTwinDiffersOnlyInScaledPvpg) {
  SynthOptions so;
  so.days = 140;
  so.seed = 4;
  const auto base = synthesize_stream(so);
  so.drift = DriftSpec{100, 0.5};
  const auto drifted = synthesize_stream(so);
  ASSERT_EQ(base.size(), drifted.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    EXPECT_EQ(base[k].ts, drifted[k].ts);
    EXPECT_EQ(base[k].features, drifted[k].features);
    if (k / 24 < 100) {
      EXPECT_EQ(base[k].pvpg, drifted[k].pvpg);
    } else {
      EXPECT_EQ(base[k].pvpg * 0.5, drifted[k].pvpg);
    }
  }
}

TEST(Synth, NightIsZero) {
  SynthOptions so;
  so.days = 60;
  for (const auto& r : synthesize_stream(so)) {
    if (r.features[static_cast<std::size_t>(Feature::surface_solar_rad)] == 0.0) {
      EXPECT_EQ(r.pvpg, 0.0);
    }
    EXPECT_GE(r.pvpg, 0.0);
  }
}

TEST(Synth, ParameterErrors) {
  SynthOptions so;
  so.days = 0;
  EXPECT_THROW(synthesize_stream(so), Error);
  so.days = 5;
  for (double bias : {0.0, -1.0, 1.0}) {
    so.drift = DriftSpec{1, bias};
    try {
      synthesize_stream(so);
      FAIL() << bias;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::parameter);
    }
  }
}

TEST(Common, DatesAndExactNumbers) {
  EXPECT_EQ(format_date(add_months(parse_date("2013-01-31"), 1)), "2013-02-28");
  EXPECT_EQ(format_timestamp(parse_timestamp("2013-05-06T07:00")), "2013-05-06T07:00");
  EXPECT_THROW(parse_date("2013-13-01"), Error);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng) * std::pow(10.0, k % 20 - 10);
    double back = 0.0;
    ASSERT_TRUE(parse_double(format_exact(x), back));
    EXPECT_EQ(back, x);
  }
}
