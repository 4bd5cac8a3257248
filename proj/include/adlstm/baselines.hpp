#pragma once

// Reference forecasters: yesterday's observations, and the plain mean of the
// K most similar historical days.

#include <adlstm/common.hpp>
#include <adlstm/data.hpp>
#include <adlstm/simdays.hpp>

#include <array>
#include <cstddef>
#include <span>

namespace adlstm {

enum class BaselineModel { persistence, knn };

inline const char* to_string(BaselineModel m) { return m == BaselineModel::persistence ? "persistence" : "knn"; }

using HourlyValues = std::array<double, kHoursPerDay>;

struct BaselineForecast {
  BaselineModel model = BaselineModel::persistence;
  Date date{};
  HourlyValues values{};
};

inline HourlyValues persistence_forecast(const DayBatch& previous_day) { return previous_day.pvpg(); }

/// Span form for callers holding loose records; the day must be 24 contiguous hours.
inline HourlyValues persistence_forecast(std::span<const HourlyRecord> previous_day) {
  if (previous_day.size() != kHoursPerDay) throw Error(ErrorKind::shape, "previous day is incomplete");
  HourlyValues out{};
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    if (previous_day[h].ts.hour != static_cast<int>(h) || previous_day[h].ts.day != previous_day[0].ts.day) {
      throw Error(ErrorKind::shape, "previous day is incomplete");
    }
    out[h] = previous_day[h].pvpg;
  }
  return out;
}

inline HourlyValues knn_forecast(std::span<const FeatureVector> target, std::span<const DayBatch> history,
                                 const FeatureWeights& weights, std::size_t k,
                                 std::optional<Date> exclude = std::nullopt) {
  const auto neighbours = select_similar_days(target, history, weights, k, exclude);
  HourlyValues out{};
  for (const auto& n : neighbours) {
    for (const auto& day : history) {
      if (day.date != n.date) continue;
      for (std::size_t h = 0; h < kHoursPerDay; ++h) out[h] += day.hours[h].pvpg;
      break;
    }
  }
  for (auto& v : out) v /= static_cast<double>(neighbours.size());
  return out;
}

}  // namespace adlstm
