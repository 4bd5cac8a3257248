#pragma once

// Hourly PV/weather records: CSV ingestion, historical min-max scaling, day
// batching, sliding-window samples and a seeded synthetic stream generator.

#include <adlstm/common.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace adlstm {

inline constexpr std::size_t kNumFeatures = 4;
inline constexpr std::size_t kHoursPerDay = 24;

enum class Feature : std::size_t {
  rel_humidity = 0,
  temperature = 1,
  surface_solar_rad = 2,
  top_net_solar_rad = 3,
};

inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "rel_humidity", "temperature", "surface_solar_rad", "top_net_solar_rad"};

inline constexpr const char* kCsvHeader =
    "timestamp,rel_humidity,temperature,surface_solar_rad,top_net_solar_rad,pvpg";

using FeatureVector = std::array<double, kNumFeatures>;

/// One hour of input weather features and the (normalized) PV output.
struct HourlyRecord {
  Timestamp ts;
  FeatureVector features{};
  double pvpg = 0.0;

  bool operator==(const HourlyRecord&) const = default;
};

/// One complete day, hours 0..23 in order.
struct DayBatch {
  Date date{};
  std::array<HourlyRecord, kHoursPerDay> hours{};

  std::array<double, kHoursPerDay> pvpg() const {
    std::array<double, kHoursPerDay> out{};
    for (std::size_t h = 0; h < kHoursPerDay; ++h) out[h] = hours[h].pvpg;
    return out;
  }
};

struct IngestResult {
  std::vector<HourlyRecord> records;
  std::vector<Date> partial_days;  // days with fewer than 24 contiguous hours
};

struct DayGrouping {
  std::vector<DayBatch> days;
  std::vector<Date> partial_days;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Groups records into complete days. Records must be sorted by timestamp.
inline DayGrouping group_days(std::span<const HourlyRecord> records) {
  DayGrouping out;
  std::size_t i = 0;
  while (i < records.size()) {
    const Date day = records[i].ts.day;
    std::size_t j = i;
    while (j < records.size() && records[j].ts.day == day) ++j;
    bool complete = (j - i) == kHoursPerDay;
    for (std::size_t k = i; complete && k < j; ++k) {
      complete = records[k].ts.hour == static_cast<int>(k - i);
    }
    if (complete) {
      DayBatch batch;
      batch.date = day;
      std::copy(records.begin() + i, records.begin() + j, batch.hours.begin());
      out.days.push_back(batch);
    } else {
      out.partial_days.push_back(day);
    }
    i = j;
  }
  return out;
}

/// Reads the documented CSV schema. Output is sorted by timestamp.
inline IngestResult ingest_csv(std::istream& in, const std::string& source = "<stream>") {
  auto fail = [&](std::size_t line, const std::string& msg) {
    return Error(ErrorKind::ingestion, source + ":" + std::to_string(line) + ": " + msg);
  };
  std::string line;
  if (!std::getline(in, line)) throw fail(1, "missing header");
  {
    const auto cols = detail::split_commas(detail::trim(line));
    const auto expected = detail::split_commas(kCsvHeader);
    if (cols.size() != expected.size()) throw fail(1, "header must be '" + std::string(kCsvHeader) + "'");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (detail::trim(cols[c]) != expected[c]) {
        throw fail(1, "missing column '" + std::string(expected[c]) + "'");
      }
    }
  }

  struct Row {
    HourlyRecord rec;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto cols = detail::split_commas(text);
    if (cols.size() != 6) throw fail(lineno, "expected 6 columns, got " + std::to_string(cols.size()));
    Row row{{}, lineno};
    try {
      row.rec.ts = parse_timestamp(detail::trim(cols[0]));
    } catch (const Error& e) {
      throw fail(lineno, e.what());
    }
    for (std::size_t c = 1; c < 6; ++c) {
      double v = 0.0;
      const auto cell = detail::trim(cols[c]);
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw fail(lineno, "unparseable or non-finite number '" + std::string(cell) + "' in column " +
                               std::string(detail::split_commas(kCsvHeader)[c]));
      }
      if (c <= kNumFeatures) {
        row.rec.features[c - 1] = v;
      } else {
        row.rec.pvpg = v;
      }
    }
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.rec.ts < b.rec.ts; });
  IngestResult out;
  out.records.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && rows[k].rec.ts == rows[k - 1].rec.ts) {
      throw fail(rows[k].line, "duplicate timestamp " + format_timestamp(rows[k].rec.ts));
    }
    out.records.push_back(rows[k].rec);
  }
  out.partial_days = group_days(out.records).partial_days;
  return out;
}

inline IngestResult ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return ingest_csv(in, path);
}

inline void write_csv(std::ostream& out, std::span<const HourlyRecord> records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << format_timestamp(r.ts);
    for (double f : r.features) out << ',' << format_exact(f);
    out << ',' << format_exact(r.pvpg) << '\n';
  }
}

inline void write_csv(const std::string& path, std::span<const HourlyRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  write_csv(out, records);
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

/// Per-feature min-max scaling fitted on the historical split only.
/// Streaming values outside the historical range map outside [0, 1].
class Normalizer {
 public:
  Normalizer() = default;

  Normalizer(const FeatureVector& min, const FeatureVector& max) : min_(min), max_(max), fitted_(true) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (!(max_[f] > min_[f]) || !std::isfinite(min_[f]) || !std::isfinite(max_[f])) {
        throw Error(ErrorKind::degenerate_feature,
                    std::string("feature ") + kFeatureNames[f] + " has an empty range");
      }
    }
  }

  static Normalizer fit(std::span<const HourlyRecord> historical) {
    if (historical.empty()) throw Error(ErrorKind::degenerate_feature, "no historical records");
    FeatureVector lo = historical.front().features;
    FeatureVector hi = lo;
    for (const auto& r : historical) {
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        lo[f] = std::min(lo[f], r.features[f]);
        hi[f] = std::max(hi[f], r.features[f]);
      }
    }
    return Normalizer(lo, hi);
  }

  bool fitted() const noexcept { return fitted_; }
  const FeatureVector& min() const noexcept { return min_; }
  const FeatureVector& max() const noexcept { return max_; }

  double normalize(double x, Feature feature) const {
    require_fitted();
    const auto f = static_cast<std::size_t>(feature);
    return (x - min_[f]) / (max_[f] - min_[f]);
  }

  FeatureVector normalize(const FeatureVector& x) const {
    FeatureVector out{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) out[f] = normalize(x[f], static_cast<Feature>(f));
    return out;
  }

  /// Copies records with features scaled; pvpg is already dimensionless and passes through.
  std::vector<HourlyRecord> apply(std::span<const HourlyRecord> records) const {
    std::vector<HourlyRecord> out(records.begin(), records.end());
    for (auto& r : out) r.features = normalize(r.features);
    return out;
  }

  bool operator==(const Normalizer&) const = default;

 private:
  void require_fitted() const {
    if (!fitted_) throw Error(ErrorKind::parameter, "normalizer is not fitted");
  }

  FeatureVector min_{};
  FeatureVector max_{};
  bool fitted_ = false;
};

/// Input window of `time_step` feature vectors ending at the target hour.
struct SequenceSample {
  std::vector<FeatureVector> window;
  double target = 0.0;
};

/// Window ending at `index`; hours before the start of `records` repeat the first record.
inline SequenceSample sample_at(std::span<const HourlyRecord> records, std::size_t index,
                                std::size_t time_step) {
  SequenceSample s;
  s.window.reserve(time_step);
  for (std::size_t k = 0; k < time_step; ++k) {
    const std::size_t back = time_step - 1 - k;
    const std::size_t src = index >= back ? index - back : 0;
    s.window.push_back(records[src].features);
  }
  s.target = records[index].pvpg;
  return s;
}

/// One sample per record. Windows cross day boundaries.
inline std::vector<SequenceSample> make_samples(std::span<const HourlyRecord> records,
                                                std::size_t time_step) {
  if (time_step == 0) throw Error(ErrorKind::parameter, "time_step must be >= 1");
  if (records.size() < time_step) {
    throw Error(ErrorKind::shape, "empty sample set: " + std::to_string(records.size()) +
                                      " records < time_step " + std::to_string(time_step));
  }
  std::vector<SequenceSample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back(sample_at(records, i, time_step));
  return out;
}

struct DriftSpec {
  std::size_t start_day = 0;  // 0-based day index into the generated stream
  double bias = 0.5;
};

struct SynthOptions {
  std::size_t days = 1;
  std::uint64_t seed = 0;
  // With the default 12+3 month split this puts the validation quarter on the
  // irradiance peak, so the drift threshold is calibrated on the noisiest days.
  Date start = Date{std::chrono::year{2012} / std::chrono::November / 1};
  std::optional<DriftSpec> drift;
};

/// Seeded synthetic PV stream. Daytime output follows a half-sine clear-sky
/// profile attenuated by a smooth cloudiness process that also drives both
/// radiation features; humidity falls and temperature rises with sunshine.
/// An unobserved AR(1) daily efficiency factor (soiling-like) scales output
/// without touching any feature, so recent days carry information the
/// features do not.
/// Drift multiplies pvpg by `bias` from `drift.start_day` on and leaves the
/// features and every random draw untouched.
inline std::vector<HourlyRecord> synthesize_stream(const SynthOptions& opt) {
  if (opt.days < 1) throw Error(ErrorKind::parameter, "days must be >= 1");
  if (opt.drift) {
    const double b = opt.drift->bias;
    if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorKind::parameter, "drift bias must be > 0");
    if (b == 1.0) throw Error(ErrorKind::parameter, "drift bias of 1 is not a drift");
  }
  using std::numbers::pi;
  constexpr double kEffPhi = 0.7;   // day-to-day persistence of the efficiency factor
  constexpr double kEffSd = 0.025;  // its stationary standard deviation
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<HourlyRecord> out;
  out.reserve(opt.days * kHoursPerDay);
  double cloud_day = 0.27;
  double efficiency = 0.0;
  double cloud_ar = 0.0;
  double temp_ar = 0.0;
  double hum_ar = 0.0;
  for (std::size_t d = 0; d < opt.days; ++d) {
    const Date date = opt.start + std::chrono::days{static_cast<long>(d)};
    const std::chrono::year_month_day ymd{date};
    const double doy = (date - Date{ymd.year() / std::chrono::January / 1}).count();
    // +1 near the December solstice (southern-hemisphere summer).
    const double season = std::cos(2.0 * pi * (doy - 355.0) / 365.25);
    const double day_length = 12.0 + 2.2 * season;
    const double sunrise = 12.0 - 0.5 * day_length;
    const double amplitude = 0.78 + 0.17 * season;

    const double u = unif(rng);
    cloud_day = 0.55 * cloud_day + 0.45 * (0.8 * u * u);
    efficiency = kEffPhi * efficiency + kEffSd * std::sqrt(1.0 - kEffPhi * kEffPhi) * gauss(rng);
    const bool drifted = opt.drift && d >= opt.drift->start_day;

    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      cloud_ar = 0.8 * cloud_ar + 0.6 * gauss(rng);
      temp_ar = 0.9 * temp_ar + 0.44 * gauss(rng);
      hum_ar = 0.9 * hum_ar + 0.44 * gauss(rng);
      const double noise = gauss(rng);

      const double t = static_cast<double>(h) + 0.5;
      const double phase = (t - sunrise) / day_length;
      const double clear = (phase > 0.0 && phase < 1.0) ? amplitude * std::sin(pi * phase) : 0.0;
      const double cloud = std::clamp(cloud_day + 0.08 * cloud_ar, 0.0, 0.95);
      const double transmit = 1.0 - 0.75 * cloud;
      const double sun = clear * transmit;

      HourlyRecord r;
      r.ts = Timestamp{date, static_cast<int>(h)};
      const double temperature = 287.0 + 7.0 * season + 7.0 * sun + 1.0 * temp_ar;
      r.features[static_cast<std::size_t>(Feature::rel_humidity)] =
          std::clamp(68.0 - 30.0 * sun + 25.0 * cloud + 3.0 * hum_ar, 5.0, 100.0);
      r.features[static_cast<std::size_t>(Feature::temperature)] = temperature;
      r.features[static_cast<std::size_t>(Feature::surface_solar_rad)] = 3.6e6 * sun;
      r.features[static_cast<std::size_t>(Feature::top_net_solar_rad)] = 4.6e6 * clear * (1.0 - 0.25 * cloud);
      double pvpg = 0.0;
      if (clear > 0.0) {
        pvpg = std::clamp(0.92 * (1.0 + efficiency) * sun * (1.0 - 0.004 * (temperature - 298.0)) + 0.012 * noise,
                          0.0, 1.0);
      }
      if (drifted) pvpg *= opt.drift->bias;
      r.pvpg = pvpg;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace adlstm
