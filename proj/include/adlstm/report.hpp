#pragma once

// Replay output files: hourly forecast table, tagged baseline table and a flat
// key = value summary with per-case metrics and improvement rates.

#include <adlstm/adapt.hpp>
#include <adlstm/common.hpp>
#include <adlstm/metrics.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace adlstm {

inline constexpr std::array<const char*, 4> kModelNames = {"persistence", "knn", "ol-lstm", "ad-lstm"};

inline void write_day_report(std::ostream& out, std::span<const DayReport> days) {
  out << "date,hour,observed,forecast_ol,forecast_ad,drift_regime\n";
  for (const auto& d : days) {
    const std::string date = format_date(d.date);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      out << date << ',' << h << ',' << format_exact(d.observed[h]) << ',' << format_exact(d.offline[h]) << ','
          << format_exact(d.adaptive[h]) << ',' << (d.drift_regime ? 1 : 0) << '\n';
    }
  }
}

inline void write_baseline_report(std::ostream& out, std::span<const DayReport> days) {
  out << "model,date,hour,observed,forecast\n";
  for (const char* model : {"persistence", "knn"}) {
    const bool persistence = std::string(model) == "persistence";
    for (const auto& d : days) {
      const std::string date = format_date(d.date);
      const auto& f = persistence ? d.persistence : d.knn;
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        out << model << ',' << date << ',' << h << ',' << format_exact(d.observed[h]) << ',' << format_exact(f[h])
            << '\n';
      }
    }
  }
}

struct CaseMetrics {
  std::string name;
  std::size_t days = 0;
  std::array<MetricBundle, 4> models{};  // kModelNames order
  double improvement_rate = std::nan("");  // ad-lstm vs ol-lstm MSE, NaN when ol MSE is 0
};

inline CaseMetrics case_metrics(const std::string& name, std::span<const DayReport> days) {
  CaseMetrics c;
  c.name = name;
  c.days = days.size();
  if (days.empty()) return c;
  std::array<std::vector<double>, 4> fc;
  std::vector<double> obs;
  for (const auto& d : days) {
    obs.insert(obs.end(), d.observed.begin(), d.observed.end());
    fc[0].insert(fc[0].end(), d.persistence.begin(), d.persistence.end());
    fc[1].insert(fc[1].end(), d.knn.begin(), d.knn.end());
    fc[2].insert(fc[2].end(), d.offline.begin(), d.offline.end());
    fc[3].insert(fc[3].end(), d.adaptive.begin(), d.adaptive.end());
  }
  for (std::size_t m = 0; m < 4; ++m) c.models[m] = evaluate(fc[m], obs);
  if (c.models[2].mse > 0.0) c.improvement_rate = improvement_rate(c.models[2].mse, c.models[3].mse);
  return c;
}

/// Cases: the whole replay, plus the stretches before and from the
/// confirmation day when a drift was confirmed.
inline std::vector<CaseMetrics> replay_cases(const ReplayResult& r) {
  std::vector<CaseMetrics> out;
  out.push_back(case_metrics("all", r.days));
  if (r.drift_confirmed_on) {
    std::size_t split = 0;
    while (split < r.days.size() && r.days[split].date < *r.drift_confirmed_on) ++split;
    const std::span<const DayReport> all(r.days);
    out.push_back(case_metrics("before_confirmation", all.first(split)));
    out.push_back(case_metrics("from_confirmation", all.subspan(split)));
  }
  return out;
}

inline void write_summary(std::ostream& out, const ReplayResult& r, std::uint64_t seed,
                          const std::string& config_hash) {
  out << "format = adlstm-summary v1\n";
  out << "# metrics are unscaled; tables conventionally print MAE x1e-2 and MSE x1e-3\n";
  out << "seed = " << seed << '\n';
  out << "config_hash = " << config_hash << '\n';
  out << "days = " << r.days.size() << '\n';
  std::size_t confirmations = 0;
  for (const auto& e : r.drift_log) confirmations += e.event == DriftEvent::drift_confirmed ? 1 : 0;
  out << "drift_confirmations = " << confirmations << '\n';
  out << "drift_confirmed_on = " << (r.drift_confirmed_on ? format_date(*r.drift_confirmed_on) : "none") << '\n';
  for (const auto& c : replay_cases(r)) {
    const std::string prefix = "case." + c.name + ".";
    out << prefix << "days = " << c.days << '\n';
    for (std::size_t m = 0; m < 4; ++m) {
      const std::string mp = prefix + kModelNames[m] + ".";
      out << mp << "mae = " << format_exact(c.models[m].mae) << '\n';
      out << mp << "mse = " << format_exact(c.models[m].mse) << '\n';
      out << mp << "r2 = " << format_exact(c.models[m].r2) << '\n';
    }
    out << prefix << "improvement_rate_mse = " << format_exact(c.improvement_rate) << '\n';
  }
}

}  // namespace adlstm
