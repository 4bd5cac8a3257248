#pragma once

// Weighted K-nearest-neighbour retrieval of similar historical days. Each
// input variable is weighted by |Pearson correlation| with the PV output.

#include <adlstm/common.hpp>
#include <adlstm/data.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace adlstm {

inline double pcc(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorKind::shape, "pcc needs two equal-length series of at least 2 points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    mx += xs[j];
    my += ys[j];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double dx = xs[j] - mx;
    const double dy = ys[j] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::zero_variance, "pcc of a constant series");
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

struct FeatureWeights {
  std::array<double, kNumFeatures> w{};

  bool operator==(const FeatureWeights&) const = default;
};

/// w_i = |pcc(feature_i, pvpg)| over the hourly series of the historical split.
inline FeatureWeights fit_weights(std::span<const HourlyRecord> historical) {
  if (historical.empty()) throw Error(ErrorKind::insufficient_history, "no historical records for weights");
  std::vector<double> target(historical.size());
  std::vector<double> feature(historical.size());
  for (std::size_t j = 0; j < historical.size(); ++j) target[j] = historical[j].pvpg;
  FeatureWeights out;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    for (std::size_t j = 0; j < historical.size(); ++j) feature[j] = historical[j].features[f];
    out.w[f] = std::abs(pcc(feature, target));
  }
  return out;
}

using DayProfile = std::array<FeatureVector, kHoursPerDay>;

inline DayProfile profile_of(const DayBatch& day) {
  DayProfile p{};
  for (std::size_t h = 0; h < kHoursPerDay; ++h) p[h] = day.hours[h].features;
  return p;
}

struct DayDistance {
  Date date{};
  double distance = 0.0;
};

/// sqrt( sum_i w_i * ||x_i^target - x_i^candidate||^2 ), each norm over the 24 hours.
inline double day_distance(std::span<const FeatureVector> target, std::span<const FeatureVector> candidate,
                           const FeatureWeights& weights) {
  if (target.size() != kHoursPerDay || candidate.size() != kHoursPerDay) {
    throw Error(ErrorKind::shape, "day profiles must hold 24 hours");
  }
  double total = 0.0;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double sq = 0.0;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      const double d = target[h][f] - candidate[h][f];
      sq += d * d;
    }
    total += weights.w[f] * sq;
  }
  return std::sqrt(total);
}

/// K closest days, ascending by distance; ties go to the more recent date.
/// A history day dated `exclude` (the target day itself) is skipped.
inline std::vector<DayDistance> select_similar_days(std::span<const FeatureVector> target,
                                                    std::span<const DayBatch> history,
                                                    const FeatureWeights& weights, std::size_t k,
                                                    std::optional<Date> exclude = std::nullopt) {
  if (k == 0) throw Error(ErrorKind::parameter, "K must be >= 1");
  std::vector<DayDistance> all;
  all.reserve(history.size());
  for (const auto& day : history) {
    if (exclude && day.date == *exclude) continue;
    const DayProfile cand = profile_of(day);
    all.push_back({day.date, day_distance(target, cand, weights)});
  }
  if (k > all.size()) {
    throw Error(ErrorKind::insufficient_history,
                "K = " + std::to_string(k) + " exceeds " + std::to_string(all.size()) + " candidate days");
  }
  auto closer = [](const DayDistance& a, const DayDistance& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.date > b.date;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
  all.resize(k);
  return all;
}

struct RetrievalTraceRow {
  Date target{};
  std::size_t rank = 0;  // 1-based
  Date candidate{};
  double distance = 0.0;
};

inline void write_retrieval_trace(std::ostream& out, std::span<const RetrievalTraceRow> rows) {
  out << "target_date,rank,candidate_date,distance\n";
  for (const auto& r : rows) {
    out << format_date(r.target) << ',' << r.rank << ',' << format_date(r.candidate) << ','
        << format_exact(r.distance) << '\n';
  }
}

}  // namespace adlstm
