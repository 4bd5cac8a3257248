// Command-line driver: generate, pretrain, replay, sweep, gradcheck.

#include <adlstm/adlstm.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace adlstm;

namespace {

struct Flags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> data_path;
  std::optional<std::string> checkpoint;
  std::optional<std::size_t> drift_start;
  std::optional<double> drift_bias;
  std::optional<std::size_t> workers;
  std::string axis = "supp_size";
};

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = load_config_file(f.config_path);
  apply_environment(cfg);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::configuration, "--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, std::string(detail::trim(kv.substr(0, eq))), std::string(detail::trim(kv.substr(eq + 1))));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.data_path) cfg.data_path = *f.data_path;
  if (f.checkpoint) cfg.checkpoint = *f.checkpoint;
  if (f.drift_start) cfg.drift_start = *f.drift_start;
  if (f.drift_bias) cfg.drift_bias = *f.drift_bias;
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  return out;
}

std::vector<HourlyRecord> load_records(const std::string& path) {
  auto res = ingest_csv(path);
  if (!res.partial_days.empty()) {
    std::cerr << "warning: " << res.partial_days.size() << " incomplete day(s) in " << path << " are skipped\n";
  }
  return std::move(res.records);
}

struct Streams {
  std::vector<HourlyRecord> all;
  std::vector<HourlyRecord> history;
  std::vector<HourlyRecord> stream;
};

// History is everything before the checkpoint's history_end; the stream is the
// rest of data_path, or stream_path when set.
Streams split_streams(const RunConfig& cfg, const PretrainedModel& model) {
  Streams s;
  s.all = load_records(cfg.data_path);
  for (const auto& r : s.all) {
    if (r.ts.day < model.meta.history_start) continue;
    (r.ts.day < model.meta.history_end ? s.history : s.stream).push_back(r);
  }
  if (!cfg.stream_path.empty()) {
    s.stream = load_records(cfg.stream_path);
    if (!s.stream.empty() && s.stream.front().ts.day < model.meta.history_end) {
      throw Error(ErrorKind::configuration, "stream '" + cfg.stream_path + "' overlaps the historical split");
    }
  }
  if (s.stream.empty()) throw Error(ErrorKind::configuration, "no stream records after the historical split");
  return s;
}

PretrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint '" + path + "'");
  return load_pretrained(in);
}

int cmd_generate(const RunConfig& cfg) {
  SynthOptions opt;
  opt.seed = cfg.seed;
  opt.start = cfg.start_date;
  opt.days = static_cast<std::size_t>((add_months(cfg.start_date, cfg.generate_months) - cfg.start_date).count());
  if (cfg.drift_start) opt.drift = DriftSpec{*cfg.drift_start, cfg.drift_bias};
  const auto records = synthesize_stream(opt);
  auto out = open_out(cfg.data_path);
  write_csv(out, records);
  std::cout << "wrote " << records.size() << " records (" << opt.days << " days from " << format_date(opt.start)
            << ") to " << cfg.data_path << '\n';
  if (opt.drift) {
    std::cout << "drift from day " << opt.drift->start_day << " ("
              << format_date(opt.start + std::chrono::days{static_cast<long>(opt.drift->start_day)})
              << "), bias " << format_exact(opt.drift->bias) << '\n';
  }
  return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
  const auto records = load_records(cfg.data_path);
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = pretrain(records, cfg.engine, cfg.seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    auto out = open_out(cfg.checkpoint);
    save_pretrained(out, model);
  }
  auto trace = open_out(fs::path(cfg.out_dir) / "pretrain_trace.csv");
  trace << "epoch,train,validation\n";
  for (const auto& e : model.trace) {
    trace << e.epoch << ',' << format_exact(e.train) << ',' << format_exact(e.validation) << '\n';
  }
  std::cout << "history " << format_date(model.meta.history_start) << " .. " << format_date(model.meta.history_end)
            << " (train until " << format_date(model.meta.train_end) << ")\n"
            << "best epoch " << model.meta.best_epoch << ", validation loss "
            << format_exact(model.meta.best_validation_loss) << '\n'
            << "threshold " << format_exact(model.threshold.value) << " (mean " << format_exact(model.threshold.mean)
            << ", std " << format_exact(model.threshold.stddev) << ")\n"
            << "checkpoint " << cfg.checkpoint << " in " << secs << " s\n";
  return 0;
}

int cmd_replay(const RunConfig& cfg) {
  const auto model = load_checkpoint(cfg.checkpoint);
  const auto s = split_streams(cfg, model);
  ReplayOptions opt;
  opt.seed = cfg.seed;
  opt.max_days = cfg.replay_days;
  const auto result = replay(model, s.history, s.stream, cfg.engine, opt);
  const fs::path dir(cfg.out_dir);
  const auto hash = config_hash(cfg);
  {
    auto out = open_out(dir / "day_report.csv");
    write_day_report(out, result.days);
  }
  {
    auto out = open_out(dir / "baselines.csv");
    write_baseline_report(out, result.days);
  }
  {
    auto out = open_out(dir / "drift_log.csv");
    write_drift_log(out, result.drift_log);
  }
  {
    auto out = open_out(dir / "summary.txt");
    write_summary(out, result, cfg.seed, hash);
  }
  std::cout << "replayed " << result.days.size() << " days; drift confirmed on "
            << (result.drift_confirmed_on ? format_date(*result.drift_confirmed_on) : "none") << '\n';
  for (const auto& c : replay_cases(result)) {
    std::cout << c.name << " (" << c.days << " days):";
    for (std::size_t m = 0; m < kModelNames.size(); ++m) {
      std::cout << ' ' << kModelNames[m] << " mse=" << format_exact(c.models[m].mse);
    }
    std::cout << " improvement=" << format_exact(c.improvement_rate) << "%\n";
  }
  std::cout << "reports in " << dir.string() << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis) {
  SweepInput in;
  in.seed = cfg.seed;
  in.workers = cfg.workers;
  std::vector<SweepRow> rows;
  std::vector<HourlyRecord> history, stream;
  auto fill = [&](const PretrainedModel& m) {
    auto s = split_streams(cfg, m);
    history = std::move(s.history);
    stream = std::move(s.stream);
    in.history = history;
    in.stream = stream;
    if (cfg.drift_start) {
      const auto first = s.all.empty() ? m.meta.history_start : s.all.front().ts.day;
      in.drift_from = first + std::chrono::days{static_cast<long>(*cfg.drift_start)};
    }
  };
  if (axis == "supp_size") {
    const auto model = load_checkpoint(cfg.checkpoint);
    fill(model);
    rows = sweep_supp_size(model, in, cfg.engine, cfg.sweep_supp_sizes);
  } else if (axis == "hidden_units") {
    const auto records = load_records(cfg.data_path);
    const auto split = split_history(records, cfg.engine);
    PretrainedModel bounds;
    bounds.meta.history_start = split.history_start;
    bounds.meta.history_end = split.history_end;
    fill(bounds);
    rows = sweep_hidden_units(in, cfg.engine, cfg.sweep_hidden_units);
  } else {
    throw Error(ErrorKind::configuration, "unknown sweep axis '" + axis + "'");
  }
  const fs::path dir(cfg.out_dir);
  {
    auto out = open_out(dir / ("sweep_" + axis + ".csv"));
    write_sweep_table(out, rows, cfg.seed, config_hash(cfg));
  }
  {
    auto out = open_out(dir / ("sweep_" + axis + "_timing.csv"));
    write_sweep_timing(out, rows);
  }
  for (const auto& r : rows) {
    std::cout << axis << '=' << r.point << ' ' << r.case_label << ' ' << format_date(r.case_date)
              << (r.drift ? " drift" : "") << " mse_ol=" << format_exact(r.mse_offline)
              << " mse_ad=" << format_exact(r.mse_adaptive) << " ir=" << format_exact(r.improvement_rate) << "%\n";
  }
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
  SynthOptions so;
  so.days = 2;
  so.seed = cfg.seed;
  so.start = cfg.start_date;
  const auto raw = synthesize_stream(so);
  const auto norm = Normalizer::fit(raw);
  const auto records = norm.apply(raw);
  const auto all = make_samples(records, cfg.engine.time_step);
  // Daylight samples exercise every gate; take five consecutive ones from noon.
  const std::vector<SequenceSample> samples(all.begin() + 10, all.begin() + 15);
  const auto params = LstmParams::random(cfg.engine.hidden, cfg.engine.input_size, cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = grad_check(params, samples, cfg.gradcheck_step);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = rep.max_relative_error < cfg.gradcheck_tolerance;
  std::cout << "checked " << rep.checked << " parameters (H=" << cfg.engine.hidden << ", T=" << cfg.engine.time_step
            << "): max relative error " << rep.max_relative_error << " at index " << rep.worst_index
            << ", max absolute " << rep.max_absolute_error << ", " << secs << " s: " << (ok ? "PASS" : "FAIL")
            << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive LSTM forecasting of PV generation under concept drift"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("-c,--config", f.config_path, "key = value configuration file");
  app.add_option("--set", f.sets, "override one key, key=value (repeatable)");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--out", f.out_dir, "output directory");
  app.add_option("--data", f.data_path, "hourly CSV path");
  app.add_option("--checkpoint", f.checkpoint, "pretrained checkpoint path");
  app.add_option("--drift-start", f.drift_start, "day index where the synthetic drift begins");
  app.add_option("--drift-bias", f.drift_bias, "multiplicative pvpg bias after drift");
  app.add_option("--workers", f.workers, "parallel workers for sweeps");

  auto* gen = app.add_subcommand("generate", "write a synthetic hourly CSV");
  auto* pre = app.add_subcommand("pretrain", "train the offline model and the drift threshold");
  auto* rep = app.add_subcommand("replay", "replay the stream day by day");
  auto* swp = app.add_subcommand("sweep", "sensitivity sweeps on seasonal case days");
  swp->add_option("--axis", f.axis, "supp_size or hidden_units")
      ->check(CLI::IsMember({"supp_size", "hidden_units"}));
  auto* gc = app.add_subcommand("gradcheck", "compare backprop with finite differences");

  CLI11_PARSE(app, argc, argv);
  try {
    const RunConfig cfg = resolve(f);
    if (gen->parsed()) return cmd_generate(cfg);
    if (pre->parsed()) return cmd_pretrain(cfg);
    if (rep->parsed()) return cmd_replay(cfg);
    if (swp->parsed()) return cmd_sweep(cfg, f.axis);
    if (gc->parsed()) return cmd_gradcheck(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
