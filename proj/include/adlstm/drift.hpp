#pragma once

// Daily batch error, the mean + 3 sigma error threshold and the sliding-window
// (SDWIN) confidence counter that turns consecutive exceedances into a
// confirmed concept drift.

#include <adlstm/common.hpp>
#include <adlstm/data.hpp>

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace adlstm {

struct BatchError {
  Date date{};
  double value = 0.0;  // MSE over the day's 24 hours
};

/// MSE of one day; both spans must hold exactly 24 values.
inline BatchError batch_error(std::span<const double> forecasts, std::span<const double> observations,
                              Date date = {}) {
  if (forecasts.size() != kHoursPerDay || observations.size() != kHoursPerDay) {
    throw Error(ErrorKind::shape, "batch error needs 24 forecast/observation pairs, got " +
                                      std::to_string(forecasts.size()) + "/" + std::to_string(observations.size()));
  }
  double sum = 0.0;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    const double r = forecasts[h] - observations[h];
    sum += r * r;
  }
  return {date, sum / static_cast<double>(kHoursPerDay)};
}

struct Threshold {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double value = 0.0;   // mean + 3 * stddev
};

inline Threshold estimate_threshold(std::span<const double> reference_errors) {
  if (reference_errors.size() < 2) {
    throw Error(ErrorKind::insufficient_history, "threshold needs at least 2 reference errors");
  }
  const double n = static_cast<double>(reference_errors.size());
  double mean = 0.0;
  for (double e : reference_errors) mean += e;
  mean /= n;
  double ss = 0.0;
  for (double e : reference_errors) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / n);
  return {mean, sd, mean + 3.0 * sd};
}

enum class DriftStatus { monitoring, drift_confirmed };

enum class DriftEvent { none, warning, drift_confirmed, cleared };

inline const char* to_string(DriftEvent e) {
  switch (e) {
    case DriftEvent::none: return "none";
    case DriftEvent::warning: return "warning";
    case DriftEvent::drift_confirmed: return "drift_confirmed";
    case DriftEvent::cleared: return "cleared";
  }
  return "unknown";
}

struct SdwinState {
  std::size_t confidence = 0;  // C
  std::size_t c_max = 3;
  DriftStatus status = DriftStatus::monitoring;
  std::vector<Date> warnings;  // dates flagged since the last clear/reset

  explicit SdwinState(std::size_t max_confidence = 3) : c_max(max_confidence) {
    if (c_max == 0) throw Error(ErrorKind::parameter, "C_max must be >= 1");
  }
};

/// Advances the window by one batch. Exceedance is strict (E_j > E_th).
inline DriftEvent sdwin_step(SdwinState& state, const Threshold& threshold, const BatchError& err) {
  if (state.status == DriftStatus::drift_confirmed) {
    throw Error(ErrorKind::state_machine, "drift already confirmed; reset the detector before stepping");
  }
  if (err.value > threshold.value) {
    ++state.confidence;
    state.warnings.push_back(err.date);
    if (state.confidence >= state.c_max) {
      state.status = DriftStatus::drift_confirmed;
      return DriftEvent::drift_confirmed;
    }
    return DriftEvent::warning;
  }
  const bool had_warnings = state.confidence > 0;
  state.confidence = 0;
  state.warnings.clear();
  return had_warnings ? DriftEvent::cleared : DriftEvent::none;
}

/// Back to monitoring with C = 0; C_max is kept and the threshold lives elsewhere.
inline void reset(SdwinState& state) {
  state.confidence = 0;
  state.status = DriftStatus::monitoring;
  state.warnings.clear();
}

struct DriftLogEntry {
  Date date{};
  double error = 0.0;
  double threshold = 0.0;
  std::size_t confidence = 0;
  DriftEvent event = DriftEvent::none;
};

inline void write_drift_log(std::ostream& out, std::span<const DriftLogEntry> log) {
  out << "date,E_j,E_th,C,event\n";
  for (const auto& e : log) {
    out << format_date(e.date) << ',' << format_exact(e.error) << ',' << format_exact(e.threshold) << ','
        << e.confidence << ',' << to_string(e.event) << '\n';
  }
}

}  // namespace adlstm
