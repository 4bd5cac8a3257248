#pragma once

// Sweeps over the supplementary-set size and the hidden-unit count, evaluated
// on four seasonal target days of the stream.

#include <adlstm/adapt.hpp>
#include <adlstm/common.hpp>
#include <adlstm/metrics.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace adlstm {

/// Runs `tasks` on up to `workers` threads; rethrows the first failure after all finish.
inline void run_parallel(std::vector<std::function<void()>>& tasks, std::size_t workers) {
  if (workers <= 1 || tasks.size() <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  std::vector<std::thread> pool;
  const std::size_t n = std::min(workers, tasks.size());
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < tasks.size(); k = next++) {
        try {
          tasks[k]();
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct SeasonCase {
  std::string label;  // months of the season, e.g. "DJF"
  std::size_t day = 0;  // timeline day index
  Date date{};
};

/// One target day per season: the first mid-month day (15 Jan/Apr/Jul/Oct)
/// found among the stream days, in stream order.
inline std::vector<SeasonCase> season_cases(const Timeline& timeline) {
  struct Anchor {
    const char* label;
    unsigned month;
  };
  constexpr Anchor anchors[] = {{"DJF", 1}, {"MAM", 4}, {"JJA", 7}, {"SON", 10}};
  std::vector<SeasonCase> out;
  for (const auto& a : anchors) {
    for (std::size_t d = timeline.history_days(); d < timeline.days().size(); ++d) {
      const std::chrono::year_month_day ymd{timeline.days()[d].date};
      if (static_cast<unsigned>(ymd.month()) == a.month && static_cast<unsigned>(ymd.day()) == 15) {
        out.push_back({a.label, d, timeline.days()[d].date});
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const SeasonCase& a, const SeasonCase& b) { return a.day < b.day; });
  if (out.empty()) throw Error(ErrorKind::insufficient_history, "stream holds no seasonal case day");
  return out;
}

struct SweepRow {
  std::string axis;
  std::size_t point = 0;
  std::string case_label;
  Date case_date{};
  bool drift = false;
  std::size_t adjacent_days = 0;
  std::size_t similar_days = 0;
  double mse_offline = 0.0;
  double mse_adaptive = 0.0;
  double improvement_rate = 0.0;
  double pretrain_seconds = 0.0;
  double adapt_seconds = 0.0;
};

struct SweepInput {
  std::span<const HourlyRecord> history;
  std::span<const HourlyRecord> stream;
  std::optional<Date> drift_from;  // known drift onset; cases on/after it use AD-only sets
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline SweepRow evaluate_case(const PretrainedModel& model, const Timeline& timeline, const SeasonCase& c,
                              const EngineConfig& cfg, std::size_t supp_size, bool drift, std::uint64_t seed) {
  SweepRow row;
  row.case_label = c.label;
  row.case_date = c.date;
  row.drift = drift;
  const std::size_t n_ad = drift ? supp_size : std::min(cfg.n_ad, supp_size);
  const std::size_t k = drift ? 0 : supp_size - n_ad;
  const auto t0 = std::chrono::steady_clock::now();
  const auto supp = assemble_supplementary(timeline, c.day, model.weights, drift, n_ad, k, model.time_step);
  const auto adapted = fine_tune(model, supp, cfg, day_seed(seed, c.day));
  const auto nwp = timeline.profile(c.day);
  const auto warm = timeline.warmup(c.day, model.time_step - 1);
  const auto ad = forecast_hours(adapted, nwp, warm, model.time_step);
  row.adapt_seconds = seconds_since(t0);
  const auto ol = forecast_hours(model.params, nwp, warm, model.time_step);
  const auto obs = timeline.batch(c.day).pvpg();
  row.adjacent_days = supp.adjacent.size();
  row.similar_days = supp.similar.size();
  row.mse_offline = mse(ol, obs);
  row.mse_adaptive = mse(ad, obs);
  row.improvement_rate = row.mse_offline > 0.0 ? improvement_rate(row.mse_offline, row.mse_adaptive) : std::nan("");
  return row;
}

}  // namespace detail

/// Supplementary-set size axis. Without drift, a size n keeps min(n_ad, n)
/// adjacent days and fills the rest with similar days; under drift all n
/// days are adjacent.
inline std::vector<SweepRow> sweep_supp_size(const PretrainedModel& model, const SweepInput& in,
                                             const EngineConfig& cfg, std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw Error(ErrorKind::configuration, "empty sweep list");
  const Timeline timeline(model.normalizer, in.history, in.stream);
  const auto cases = season_cases(timeline);
  std::vector<SweepRow> rows(sizes.size() * cases.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t p = 0; p < sizes.size(); ++p) {
    for (std::size_t c = 0; c < cases.size(); ++c) {
      tasks.emplace_back([&, p, c] {
        const bool drift = in.drift_from && cases[c].date >= *in.drift_from;
        SweepRow row = detail::evaluate_case(model, timeline, cases[c], cfg, sizes[p], drift, in.seed);
        row.axis = "supp_size";
        row.point = sizes[p];
        rows[p * cases.size() + c] = std::move(row);
      });
    }
  }
  run_parallel(tasks, in.workers);
  return rows;
}

/// Hidden-unit axis: pretrains one model per size, then evaluates every case
/// with the configured supplementary composition.
inline std::vector<SweepRow> sweep_hidden_units(const SweepInput& in, const EngineConfig& cfg,
                                                std::span<const std::size_t> hidden_sizes) {
  if (hidden_sizes.empty()) throw Error(ErrorKind::configuration, "empty sweep list");
  std::vector<std::vector<SweepRow>> per_point(hidden_sizes.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t p = 0; p < hidden_sizes.size(); ++p) {
    tasks.emplace_back([&, p] {
      EngineConfig point_cfg = cfg;
      point_cfg.hidden = hidden_sizes[p];
      const auto t0 = std::chrono::steady_clock::now();
      const PretrainedModel model = pretrain(in.history, point_cfg, in.seed);
      const double pretrain_seconds = detail::seconds_since(t0);
      const Timeline timeline(model.normalizer, in.history, in.stream);
      for (const auto& c : season_cases(timeline)) {
        const bool drift = in.drift_from && c.date >= *in.drift_from;
        const std::size_t supp = drift ? cfg.n_ad : cfg.n_ad + cfg.k_similar;
        SweepRow row = detail::evaluate_case(model, timeline, c, point_cfg, supp, drift, in.seed);
        row.axis = "hidden_units";
        row.point = hidden_sizes[p];
        row.pretrain_seconds = pretrain_seconds;
        per_point[p].push_back(std::move(row));
      }
    });
  }
  run_parallel(tasks, in.workers);
  std::vector<SweepRow> rows;
  for (auto& v : per_point) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

/// Deterministic sweep table (no timings, so it reproduces byte-for-byte).
inline void write_sweep_table(std::ostream& out, std::span<const SweepRow> rows, std::uint64_t seed,
                              const std::string& config_hash) {
  out << "axis,point,case,case_date,drift,adjacent_days,similar_days,mse_ol,mse_ad,improvement_rate,seed,"
         "config_hash\n";
  for (const auto& r : rows) {
    out << r.axis << ',' << r.point << ',' << r.case_label << ',' << format_date(r.case_date) << ','
        << (r.drift ? 1 : 0) << ',' << r.adjacent_days << ',' << r.similar_days << ',' << format_exact(r.mse_offline)
        << ',' << format_exact(r.mse_adaptive) << ',' << format_exact(r.improvement_rate) << ',' << seed << ','
        << config_hash << '\n';
  }
}

/// Wall-clock costs, kept apart from the reproducible table.
inline void write_sweep_timing(std::ostream& out, std::span<const SweepRow> rows) {
  out << "axis,point,case,pretrain_seconds,adapt_seconds\n";
  for (const auto& r : rows) {
    out << r.axis << ',' << r.point << ',' << r.case_label << ',' << r.pretrain_seconds << ',' << r.adapt_seconds
        << '\n';
  }
}

}  // namespace adlstm
