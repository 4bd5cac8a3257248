#pragma once

#include <adlstm/common.hpp>

#include <algorithm>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

namespace adlstm {

namespace detail {
inline void check_pairs(std::span<const double> f, std::span<const double> o, const char* what) {
  if (f.empty() || f.size() != o.size()) {
    throw Error(ErrorKind::undefined_metric, std::string(what) + " needs equal non-zero lengths");
  }
}
}  // namespace detail

inline double mae(std::span<const double> forecasts, std::span<const double> observations) {
  detail::check_pairs(forecasts, observations, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) sum += std::abs(forecasts[i] - observations[i]);
  return sum / static_cast<double>(forecasts.size());
}

inline double mse(std::span<const double> forecasts, std::span<const double> observations) {
  detail::check_pairs(forecasts, observations, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double r = forecasts[i] - observations[i];
    sum += r * r;
  }
  return sum / static_cast<double>(forecasts.size());
}

/// 1 - SS_res / SS_tot. Unbounded below.
inline double r2(std::span<const double> forecasts, std::span<const double> observations) {
  detail::check_pairs(forecasts, observations, "r2");
  double mean = 0.0;
  for (double y : observations) mean += y;
  mean /= static_cast<double>(observations.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    ss_res += (forecasts[i] - observations[i]) * (forecasts[i] - observations[i]);
    ss_tot += (mean - observations[i]) * (mean - observations[i]);
  }
  const bool constant = std::all_of(observations.begin(), observations.end(),
                                    [&](double y) { return y == observations.front(); });
  if (constant || ss_tot == 0.0) throw Error(ErrorKind::zero_variance, "r2 with constant observations");
  return 1.0 - ss_res / ss_tot;
}

struct MetricBundle {
  double mae = 0.0;
  double mse = 0.0;
  double r2 = 0.0;  // NaN when the observations are constant
  std::size_t n = 0;
};

inline MetricBundle evaluate(std::span<const double> forecasts, std::span<const double> observations) {
  MetricBundle b;
  b.mae = mae(forecasts, observations);
  b.mse = mse(forecasts, observations);
  try {
    b.r2 = r2(forecasts, observations);
  } catch (const Error&) {
    b.r2 = std::nan("");
  }
  b.n = forecasts.size();
  return b;
}

/// Percentage reduction of the adaptive MSE relative to the offline MSE.
inline double improvement_rate(double mse_offline, double mse_adaptive) {
  if (!(mse_offline > 0.0)) throw Error(ErrorKind::undefined_metric, "improvement rate needs a positive baseline MSE");
  return (1.0 - mse_adaptive / mse_offline) * 100.0;
}

}  // namespace adlstm
