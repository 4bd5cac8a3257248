#pragma once

// Two-phase adaptive learning: offline pretraining on the historical split,
// then a causal day-by-day replay that fine-tunes a fresh copy of the
// pretrained network on adjacent and similar days before each forecast.

#include <adlstm/baselines.hpp>
#include <adlstm/common.hpp>
#include <adlstm/data.hpp>
#include <adlstm/drift.hpp>
#include <adlstm/metrics.hpp>
#include <adlstm/nnet.hpp>
#include <adlstm/simdays.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace adlstm {

struct EngineConfig {
  // network / pretraining
  std::size_t layers = 1;
  std::size_t hidden = 4;
  std::size_t time_step = 4;
  std::size_t input_size = 4;
  double learning_rate = 0.001;
  std::size_t batch_size = 256;
  std::size_t epochs = 500;
  int train_months = 12;
  int validation_months = 3;
  // online adaptation
  std::size_t n_ad = 3;
  std::size_t k_similar = 6;
  std::size_t finetune_epochs = 50;
  std::size_t finetune_batch = 32;
  double finetune_learning_rate = 0.001;
  // detector and baselines
  std::size_t c_max = 3;
  std::size_t knn_k = 5;

  void validate() const {
    auto bad = [](const std::string& msg) { return Error(ErrorKind::configuration, msg); };
    if (layers != 1) throw bad("only a single LSTM layer is supported");
    if (input_size != kNumFeatures) throw bad("input_size must be " + std::to_string(kNumFeatures));
    if (hidden == 0 || time_step == 0 || batch_size == 0 || finetune_batch == 0) {
      throw bad("hidden, time_step and batch sizes must be >= 1");
    }
    if (!(learning_rate > 0.0) || !(finetune_learning_rate > 0.0)) throw bad("learning rates must be > 0");
    if (train_months < 1 || validation_months < 1) throw bad("train/validation months must be >= 1");
    if (n_ad == 0) throw bad("n_ad must be >= 1");
    if (c_max == 0) throw bad("c_max must be >= 1");
    if (knn_k == 0) throw bad("knn_k must be >= 1");
  }
};

/// History and stream records on one normalized, contiguous time axis.
class Timeline {
 public:
  struct DayRef {
    Date date{};
    std::size_t first = 0;  // index of hour 0 in records()
  };

  Timeline(const Normalizer& normalizer, std::span<const HourlyRecord> history,
           std::span<const HourlyRecord> stream) {
    std::vector<HourlyRecord> raw;
    raw.reserve(history.size() + stream.size());
    raw.insert(raw.end(), history.begin(), history.end());
    raw.insert(raw.end(), stream.begin(), stream.end());
    for (std::size_t k = 1; k < raw.size(); ++k) {
      if (!(raw[k - 1].ts < raw[k].ts)) {
        throw Error(ErrorKind::ingestion, "records out of order at " + format_timestamp(raw[k].ts));
      }
    }
    records_ = normalizer.apply(raw);
    std::size_t i = 0;
    while (i < records_.size()) {
      const Date day = records_[i].ts.day;
      std::size_t j = i;
      while (j < records_.size() && records_[j].ts.day == day) ++j;
      bool complete = j - i == kHoursPerDay;
      for (std::size_t k = i; complete && k < j; ++k) complete = records_[k].ts.hour == static_cast<int>(k - i);
      if (complete) {
        if (i < history.size()) ++history_days_;
        days_.push_back({day, i});
      }
      i = j;
    }
    history_batches_.reserve(history_days_);
    for (std::size_t d = 0; d < history_days_; ++d) history_batches_.push_back(batch(d));
  }

  std::span<const HourlyRecord> records() const noexcept { return records_; }
  std::span<const DayRef> days() const noexcept { return days_; }
  std::size_t history_days() const noexcept { return history_days_; }
  std::span<const DayBatch> history_batches() const noexcept { return history_batches_; }

  DayBatch batch(std::size_t day) const {
    DayBatch b;
    b.date = days_[day].date;
    std::copy_n(records_.begin() + static_cast<std::ptrdiff_t>(days_[day].first), kHoursPerDay, b.hours.begin());
    return b;
  }

  std::vector<FeatureVector> profile(std::size_t day) const {
    std::vector<FeatureVector> out(kHoursPerDay);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) out[h] = records_[days_[day].first + h].features;
    return out;
  }

  /// The `count` feature rows preceding hour 0 of `day`; the first record pads the stream start.
  std::vector<FeatureVector> warmup(std::size_t day, std::size_t count) const {
    std::vector<FeatureVector> out(count);
    const std::size_t first = days_[day].first;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t back = count - k;
      out[k] = records_[first >= back ? first - back : 0].features;
    }
    return out;
  }

  std::optional<std::size_t> find_day(Date date) const {
    auto it = std::lower_bound(days_.begin(), days_.end(), date,
                               [](const DayRef& d, Date v) { return d.date < v; });
    if (it == days_.end() || it->date != date) return std::nullopt;
    return static_cast<std::size_t>(it - days_.begin());
  }

 private:
  std::vector<HourlyRecord> records_;
  std::vector<DayRef> days_;
  std::size_t history_days_ = 0;
  std::vector<DayBatch> history_batches_;
};

/// Per-hour forward passes over warm-up + NWP rows, clamped to [0, 1].
inline HourlyValues forecast_hours(const LstmParams& params, std::span<const FeatureVector> nwp,
                                   std::span<const FeatureVector> warmup, std::size_t time_step) {
  if (nwp.size() != kHoursPerDay) throw Error(ErrorKind::shape, "forecast needs 24 NWP rows");
  if (time_step == 0 || warmup.size() != time_step - 1) {
    throw Error(ErrorKind::shape, "forecast needs exactly time_step - 1 warm-up rows");
  }
  detail::Unroller u(params.hidden(), params.input(), time_step);
  HourlyValues out{};
  SequenceSample s;
  s.window.resize(time_step);
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    for (std::size_t k = 0; k < time_step; ++k) {
      const std::size_t pos = h + k;  // index into warmup ++ nwp
      s.window[k] = pos < warmup.size() ? warmup[pos] : nwp[pos - warmup.size()];
    }
    out[h] = std::clamp(u.forward(params, s), 0.0, 1.0);
  }
  return out;
}

enum class Provenance { offline, adaptive };

struct DayForecast {
  Date date{};
  HourlyValues values{};
  Provenance provenance = Provenance::offline;
  DriftStatus status = DriftStatus::monitoring;
};

inline DayForecast forecast_day(const LstmParams& params, Date date, std::span<const FeatureVector> nwp,
                                std::span<const FeatureVector> warmup, std::size_t time_step,
                                Provenance provenance = Provenance::offline,
                                DriftStatus status = DriftStatus::monitoring) {
  return {date, forecast_hours(params, nwp, warmup, time_step), provenance, status};
}

struct PretrainMeta {
  Date history_start{};
  Date train_end{};    // exclusive
  Date history_end{};  // exclusive
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
};

struct PretrainedModel {
  LstmParams params;
  std::size_t time_step = 4;
  Normalizer normalizer;
  Threshold threshold;
  FeatureWeights weights;
  std::vector<double> reference_errors;  // daily validation errors behind the threshold
  PretrainMeta meta;
  std::vector<EpochLoss> trace;  // not persisted in checkpoints
};

struct HistorySplit {
  std::span<const HourlyRecord> history;  // [history_start, history_end)
  Date history_start{};
  Date train_end{};
  Date history_end{};
};

/// Chronological calendar split: the first train_months then validation_months.
inline HistorySplit split_history(std::span<const HourlyRecord> records, const EngineConfig& cfg) {
  const auto grouped = group_days(records);
  if (grouped.days.empty()) throw Error(ErrorKind::configuration, "no complete historical days");
  HistorySplit s;
  s.history_start = grouped.days.front().date;
  s.train_end = add_months(s.history_start, cfg.train_months);
  s.history_end = add_months(s.history_start, cfg.train_months + cfg.validation_months);
  if (grouped.days.back().date < s.history_end - std::chrono::days{1}) {
    throw Error(ErrorKind::configuration, "insufficient history: need " +
                                              std::to_string(cfg.train_months + cfg.validation_months) +
                                              " months from " + format_date(s.history_start));
  }
  auto first = std::find_if(records.begin(), records.end(),
                            [&](const HourlyRecord& r) { return r.ts.day >= s.history_start; });
  auto last = std::find_if(first, records.end(), [&](const HourlyRecord& r) { return r.ts.day >= s.history_end; });
  s.history = records.subspan(static_cast<std::size_t>(first - records.begin()),
                              static_cast<std::size_t>(last - first));
  return s;
}

/// Phase 1: fit scaling and feature weights on the historical split, train on
/// the first months, keep the best-validation snapshot and derive the drift
/// threshold from its daily validation errors.
inline PretrainedModel pretrain(std::span<const HourlyRecord> historical, const EngineConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  const HistorySplit split = split_history(historical, cfg);
  PretrainedModel model;
  model.time_step = cfg.time_step;
  model.normalizer = Normalizer::fit(split.history);
  model.weights = fit_weights(split.history);

  const Timeline timeline(model.normalizer, split.history, {});
  const auto samples_all = make_samples(timeline.records(), cfg.time_step);
  std::vector<SequenceSample> train_set, validation_set;
  for (std::size_t k = 0; k < samples_all.size(); ++k) {
    (timeline.records()[k].ts.day < split.train_end ? train_set : validation_set).push_back(samples_all[k]);
  }
  if (train_set.empty() || validation_set.empty()) {
    throw Error(ErrorKind::configuration, "empty training or validation split");
  }

  const auto init = LstmParams::random(cfg.hidden, cfg.input_size, seed);
  TrainOptions opt{cfg.epochs, cfg.batch_size, cfg.learning_rate, seed, true};
  TrainResult trained = train(init, train_set, opt, validation_set);
  model.params = std::move(trained.params);
  model.trace = std::move(trained.trace);

  for (std::size_t d = 0; d < timeline.days().size(); ++d) {
    if (timeline.days()[d].date < split.train_end) continue;
    const auto fc = forecast_hours(model.params, timeline.profile(d), timeline.warmup(d, cfg.time_step - 1),
                                   cfg.time_step);
    const auto obs = timeline.batch(d).pvpg();
    model.reference_errors.push_back(batch_error(fc, obs).value);
  }
  model.threshold = estimate_threshold(model.reference_errors);
  model.meta = {split.history_start, split.train_end, split.history_end, seed, cfg.epochs, trained.best_epoch,
                trained.best_epoch > 0 ? model.trace[trained.best_epoch - 1].validation : 0.0};
  return model;
}

enum class SupplementSource { adjacent, similar };

struct SupplementaryDay {
  SupplementSource source = SupplementSource::adjacent;
  DayBatch day;                        // normalized features, observed pvpg
  std::vector<FeatureVector> warmup;   // time_step - 1 rows before hour 0
  double distance = 0.0;               // similarity distance, 0 for adjacent days
};

struct SupplementaryDataset {
  std::vector<SupplementaryDay> adjacent;
  std::vector<SupplementaryDay> similar;
  bool drift = false;

  std::size_t size() const noexcept { return adjacent.size() + similar.size(); }
  bool empty() const noexcept { return size() == 0; }
};

/// AD = the n_ad days right before `target_day`; SD = the k most similar
/// historical days, only while drift is unconfirmed.
inline SupplementaryDataset assemble_supplementary(const Timeline& timeline, std::size_t target_day,
                                                   const FeatureWeights& weights, bool drift, std::size_t n_ad,
                                                   std::size_t k, std::size_t time_step) {
  if (target_day >= timeline.days().size()) throw Error(ErrorKind::parameter, "target day out of range");
  if (target_day < n_ad) {
    throw Error(ErrorKind::insufficient_history, "need " + std::to_string(n_ad) + " adjacent days before " +
                                                     format_date(timeline.days()[target_day].date));
  }
  const Date target_date = timeline.days()[target_day].date;
  SupplementaryDataset out;
  out.drift = drift;
  for (std::size_t back = n_ad; back >= 1; --back) {
    const std::size_t d = target_day - back;
    if (timeline.days()[d].date != target_date - std::chrono::days{static_cast<long>(back)}) {
      throw Error(ErrorKind::insufficient_history, "adjacent days before " + format_date(target_date) +
                                                       " are not contiguous");
    }
    out.adjacent.push_back({SupplementSource::adjacent, timeline.batch(d), timeline.warmup(d, time_step - 1), 0.0});
  }
  if (!drift && k > 0) {
    const auto target = timeline.profile(target_day);
    const auto picks = select_similar_days(target, timeline.history_batches(), weights, k, target_date);
    for (const auto& pick : picks) {
      const std::size_t d = *timeline.find_day(pick.date);
      out.similar.push_back({SupplementSource::similar, timeline.batch(d), timeline.warmup(d, time_step - 1),
                             pick.distance});
    }
  }
  return out;
}

inline std::vector<SequenceSample> supplementary_samples(const SupplementaryDataset& supp, std::size_t time_step) {
  std::vector<SequenceSample> out;
  out.reserve(supp.size() * kHoursPerDay);
  auto add = [&](const SupplementaryDay& sd) {
    if (sd.warmup.size() != time_step - 1) throw Error(ErrorKind::shape, "supplementary warm-up length mismatch");
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      SequenceSample s;
      s.window.resize(time_step);
      for (std::size_t k = 0; k < time_step; ++k) {
        const std::size_t pos = h + k;
        s.window[k] = pos < sd.warmup.size() ? sd.warmup[pos] : sd.day.hours[pos - sd.warmup.size()].features;
      }
      s.target = sd.day.hours[h].pvpg;
      out.push_back(std::move(s));
    }
  };
  for (const auto& d : supp.adjacent) add(d);
  for (const auto& d : supp.similar) add(d);
  return out;
}

/// Phase 2 adaptation: a copy of the pretrained snapshot trained on the
/// supplementary days with fresh Adam moments.
inline LstmParams fine_tune(const PretrainedModel& base, const SupplementaryDataset& supp, const EngineConfig& cfg,
                            std::uint64_t seed) {
  if (supp.empty()) throw Error(ErrorKind::adaptation, "empty supplementary dataset");
  if (cfg.finetune_epochs == 0) return base.params;
  const auto samples = supplementary_samples(supp, base.time_step);
  TrainOptions opt{cfg.finetune_epochs, cfg.finetune_batch, cfg.finetune_learning_rate, seed, false};
  return train(base.params, samples, opt).params;
}

struct DayReport {
  Date date{};
  HourlyValues observed{};
  HourlyValues offline{};   // frozen pretrained model (OL-LSTM)
  HourlyValues adaptive{};  // fine-tuned copy (AD-LSTM)
  HourlyValues persistence{};
  HourlyValues knn{};
  double error_offline = 0.0;
  double error_adaptive = 0.0;
  bool drift_regime = false;  // supplementary rule in force when the day was forecast
  std::size_t adjacent_days = 0;
  std::size_t similar_days = 0;
};

struct ReplayOptions {
  std::uint64_t seed = 1;
  bool baselines = true;
  std::size_t max_days = 0;  // 0 = every complete stream day
  std::function<void(const DayReport&)> on_day;
};

struct ReplayResult {
  std::vector<DayReport> days;
  std::vector<DriftLogEntry> drift_log;
  std::optional<Date> drift_confirmed_on;
};

inline std::uint64_t day_seed(std::uint64_t seed, std::size_t day) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(day) + 1));
}

/// Causal replay of the stream. Each day: assemble the supplementary set under
/// the current regime, fine-tune and forecast (AD-LSTM); forecast with the
/// frozen model (OL-LSTM); then score both against the arriving observations
/// and feed the OL-LSTM error to the detector. Confirmation latches the
/// AD-only regime for the rest of the replay and ends detection.
inline ReplayResult replay(const PretrainedModel& pretrained, std::span<const HourlyRecord> history,
                           std::span<const HourlyRecord> stream, const EngineConfig& cfg,
                           const ReplayOptions& opt = {}) {
  cfg.validate();
  if (stream.empty()) return {};
  if (!history.empty() && !(history.back().ts < stream.front().ts)) {
    throw Error(ErrorKind::ingestion, "stream does not start after the history");
  }
  if (stream.front().ts.day < pretrained.meta.history_end) {
    throw Error(ErrorKind::configuration, "stream overlaps the historical split");
  }
  const std::size_t T = pretrained.time_step;
  const Timeline timeline(pretrained.normalizer, history, stream);
  SdwinState detector(cfg.c_max);
  bool drift_regime = false;
  ReplayResult result;

  std::size_t done = 0;
  for (std::size_t d = timeline.history_days(); d < timeline.days().size(); ++d) {
    if (opt.max_days != 0 && done == opt.max_days) break;
    ++done;
    const Date date = timeline.days()[d].date;
    const auto nwp = timeline.profile(d);
    const auto warm = timeline.warmup(d, T - 1);

    DayReport rep;
    rep.date = date;
    rep.drift_regime = drift_regime;

    const auto supp = assemble_supplementary(timeline, d, pretrained.weights, drift_regime, cfg.n_ad,
                                             drift_regime ? 0 : cfg.k_similar, T);
    rep.adjacent_days = supp.adjacent.size();
    rep.similar_days = supp.similar.size();
    const LstmParams adapted = fine_tune(pretrained, supp, cfg, day_seed(opt.seed, d));
    rep.adaptive = forecast_hours(adapted, nwp, warm, T);
    rep.offline = forecast_hours(pretrained.params, nwp, warm, T);

    if (opt.baselines) {
      if (d == 0 || timeline.days()[d - 1].date != date - std::chrono::days{1}) {
        throw Error(ErrorKind::shape, "persistence needs the complete previous day of " + format_date(date));
      }
      rep.persistence = persistence_forecast(timeline.batch(d - 1));
      rep.knn = knn_forecast(nwp, timeline.history_batches(), pretrained.weights, cfg.knn_k, date);
    }

    // Observations arrive.
    rep.observed = timeline.batch(d).pvpg();
    rep.error_offline = batch_error(rep.offline, rep.observed, date).value;
    rep.error_adaptive = batch_error(rep.adaptive, rep.observed, date).value;

    DriftLogEntry entry{date, rep.error_offline, pretrained.threshold.value, 0, DriftEvent::none};
    if (!drift_regime) {
      entry.event = sdwin_step(detector, pretrained.threshold, {date, rep.error_offline});
      entry.confidence = detector.confidence;
      if (entry.event == DriftEvent::drift_confirmed) {
        drift_regime = true;
        result.drift_confirmed_on = date;
        reset(detector);
      }
    }
    result.drift_log.push_back(entry);
    if (opt.on_day) opt.on_day(rep);
    result.days.push_back(std::move(rep));
  }
  return result;
}

inline constexpr const char* kPretrainedMagic = "adlstm-pretrained";
inline constexpr int kPretrainedVersion = 1;

inline void save_pretrained(std::ostream& out, const PretrainedModel& m) {
  auto vec = [&](const char* key, std::span<const double> vals) {
    out << key << " =";
    for (double v : vals) out << ' ' << format_exact(v);
    out << '\n';
  };
  out << kPretrainedMagic << " v" << kPretrainedVersion << '\n';
  out << "history_start = " << format_date(m.meta.history_start) << '\n';
  out << "train_end = " << format_date(m.meta.train_end) << '\n';
  out << "history_end = " << format_date(m.meta.history_end) << '\n';
  out << "seed = " << m.meta.seed << '\n';
  out << "epochs = " << m.meta.epochs << '\n';
  out << "best_epoch = " << m.meta.best_epoch << '\n';
  out << "best_validation_loss = " << format_exact(m.meta.best_validation_loss) << '\n';
  vec("normalizer_min", m.normalizer.min());
  vec("normalizer_max", m.normalizer.max());
  out << "threshold_mean = " << format_exact(m.threshold.mean) << '\n';
  out << "threshold_stddev = " << format_exact(m.threshold.stddev) << '\n';
  out << "threshold_value = " << format_exact(m.threshold.value) << '\n';
  vec("feature_weights", m.weights.w);
  vec("reference_errors", m.reference_errors);
  save_params(out, m.params, m.time_step);
}

inline PretrainedModel load_pretrained(std::istream& in) {
  auto fail = [](const std::string& msg) { return Error(ErrorKind::io, "bad pretrained checkpoint: " + msg); };
  std::string line;
  if (!std::getline(in, line) || line != std::string(kPretrainedMagic) + " v" + std::to_string(kPretrainedVersion)) {
    throw fail("missing or unsupported header");
  }
  auto next = [&](const std::string& key) {
    if (!std::getline(in, line)) throw fail("truncated before " + key);
    const std::string prefix = key + " =";
    if (line.rfind(prefix, 0) != 0) throw fail("expected " + key);
    std::string rest = line.substr(prefix.size());
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    return rest;
  };
  auto number = [&](const std::string& key) {
    double v = 0.0;
    if (!parse_double(next(key), v)) throw fail("bad number for " + key);
    return v;
  };
  auto integer = [&](const std::string& key) {
    long long v = 0;
    if (!parse_long(next(key), v) || v < 0) throw fail("bad integer for " + key);
    return static_cast<std::uint64_t>(v);
  };
  auto numbers = [&](const std::string& key) {
    std::istringstream ss(next(key));
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      if (!parse_double(tok, v)) throw fail("bad number in " + key);
      out.push_back(v);
    }
    return out;
  };
  auto four = [&](const std::string& key) {
    const auto v = numbers(key);
    if (v.size() != kNumFeatures) throw fail(key + " must hold 4 values");
    FeatureVector out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  };

  PretrainedModel m;
  try {
    m.meta.history_start = parse_date(next("history_start"));
    m.meta.train_end = parse_date(next("train_end"));
    m.meta.history_end = parse_date(next("history_end"));
  } catch (const Error& e) {
    throw fail(e.what());
  }
  m.meta.seed = integer("seed");
  m.meta.epochs = integer("epochs");
  m.meta.best_epoch = integer("best_epoch");
  m.meta.best_validation_loss = number("best_validation_loss");
  const auto lo = four("normalizer_min");
  const auto hi = four("normalizer_max");
  m.normalizer = Normalizer(lo, hi);
  m.threshold.mean = number("threshold_mean");
  m.threshold.stddev = number("threshold_stddev");
  m.threshold.value = number("threshold_value");
  m.weights.w = four("feature_weights");
  m.reference_errors = numbers("reference_errors");
  auto loaded = load_params(in);
  m.params = std::move(loaded.params);
  m.time_step = loaded.time_step;
  return m;
}

}  // namespace adlstm
