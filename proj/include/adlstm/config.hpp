#pragma once

// Run configuration: a versioned flat `key = value` file. Precedence is
// file < environment (ADLSTM_<KEY>) < explicit overrides (CLI flags).

#include <adlstm/adapt.hpp>
#include <adlstm/common.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace adlstm {

inline constexpr int kConfigVersion = 1;

struct RunConfig {
  EngineConfig engine;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  // paths
  std::string data_path = "data/stream.csv";
  std::string stream_path;  // empty: stream = records of data_path after the historical split
  std::string out_dir = "out";
  std::string checkpoint = "out/pretrained.ckpt";
  // synthetic data
  Date start_date = SynthOptions{}.start;
  int generate_months = 27;
  std::optional<std::size_t> drift_start;  // day index into the generated file
  double drift_bias = 0.5;
  // replay
  std::size_t replay_days = 0;  // 0 = all
  // sweeps
  std::vector<std::size_t> sweep_supp_sizes = {3, 5, 7, 9};
  std::vector<std::size_t> sweep_hidden_units = {4, 16, 64, 128, 256};
  // gradient check
  double gradcheck_step = 1e-5;
  double gradcheck_tolerance = 1e-5;

  bool operator==(const RunConfig& o) const {
    const auto& a = engine;
    const auto& b = o.engine;
    return a.layers == b.layers && a.hidden == b.hidden && a.time_step == b.time_step &&
           a.input_size == b.input_size && a.learning_rate == b.learning_rate && a.batch_size == b.batch_size &&
           a.epochs == b.epochs && a.train_months == b.train_months && a.validation_months == b.validation_months &&
           a.n_ad == b.n_ad && a.k_similar == b.k_similar && a.finetune_epochs == b.finetune_epochs &&
           a.finetune_batch == b.finetune_batch && a.finetune_learning_rate == b.finetune_learning_rate &&
           a.c_max == b.c_max && a.knn_k == b.knn_k && seed == o.seed && workers == o.workers &&
           data_path == o.data_path && stream_path == o.stream_path && out_dir == o.out_dir &&
           checkpoint == o.checkpoint && start_date == o.start_date && generate_months == o.generate_months &&
           drift_start == o.drift_start && drift_bias == o.drift_bias && replay_days == o.replay_days &&
           sweep_supp_sizes == o.sweep_supp_sizes && sweep_hidden_units == o.sweep_hidden_units &&
           gradcheck_step == o.gradcheck_step && gradcheck_tolerance == o.gradcheck_tolerance;
  }

  void validate() const {
    engine.validate();
    auto bad = [](const std::string& msg) { return Error(ErrorKind::configuration, msg); };
    if (workers == 0) throw bad("workers must be >= 1");
    if (generate_months < 1) throw bad("generate_months must be >= 1");
    if (!(drift_bias > 0.0) || drift_bias == 1.0) throw bad("drift_bias must be > 0 and != 1");
    for (auto v : sweep_supp_sizes) {
      if (v == 0) throw bad("sweep_supp_sizes entries must be >= 1");
    }
    for (auto v : sweep_hidden_units) {
      if (v == 0) throw bad("sweep_hidden_units entries must be >= 1");
    }
    if (!(gradcheck_step > 0.0) || !(gradcheck_tolerance > 0.0)) throw bad("gradcheck step/tolerance must be > 0");
  }
};

namespace detail {

struct ConfigField {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
  std::uint64_t n = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (v.empty() || ec != std::errc{} || end != v.data() + v.size()) {
    throw Error(ErrorKind::configuration, key + ": expected a non-negative integer");
  }
  return n;
}

inline double parse_real(const std::string& key, const std::string& v) {
  double d = 0.0;
  if (!parse_double(v, d) || !std::isfinite(d)) throw Error(ErrorKind::configuration, key + ": expected a number");
  return d;
}

inline std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.push_back(parse_count(key, std::string(t)));
  }
  return out;
}

inline std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
  return out;
}

template <class T>
ConfigField count_field(T RunConfig::*member) {
  return {[member](const RunConfig& c) { return std::to_string(c.*member); },
          [member](RunConfig& c, const std::string& v) { c.*member = static_cast<T>(parse_count("", v)); }};
}

template <class T>
ConfigField engine_count(T EngineConfig::*member) {
  return {[member](const RunConfig& c) { return std::to_string(c.engine.*member); },
          [member](RunConfig& c, const std::string& v) { c.engine.*member = static_cast<T>(parse_count("", v)); }};
}

inline ConfigField engine_real(double EngineConfig::*member) {
  return {[member](const RunConfig& c) { return format_exact(c.engine.*member); },
          [member](RunConfig& c, const std::string& v) { c.engine.*member = parse_real("", v); }};
}

inline ConfigField string_field(std::string RunConfig::*member) {
  return {[member](const RunConfig& c) { return c.*member; },
          [member](RunConfig& c, const std::string& v) { c.*member = v; }};
}

/// Ordered key table; the order is the serialization order.
inline const std::vector<std::pair<std::string, ConfigField>>& config_fields() {
  static const std::vector<std::pair<std::string, ConfigField>> fields = {
      {"seed", count_field(&RunConfig::seed)},
      {"workers", count_field(&RunConfig::workers)},
      {"data_path", string_field(&RunConfig::data_path)},
      {"stream_path", string_field(&RunConfig::stream_path)},
      {"out_dir", string_field(&RunConfig::out_dir)},
      {"checkpoint", string_field(&RunConfig::checkpoint)},
      {"start_date", {[](const RunConfig& c) { return format_date(c.start_date); },
                      [](RunConfig& c, const std::string& v) { c.start_date = parse_date(v); }}},
      {"generate_months", count_field(&RunConfig::generate_months)},
      {"drift_start", {[](const RunConfig& c) { return c.drift_start ? std::to_string(*c.drift_start) : "none"; },
                       [](RunConfig& c, const std::string& v) {
                         if (v == "none" || v.empty()) {
                           c.drift_start.reset();
                         } else {
                           c.drift_start = parse_count("drift_start", v);
                         }
                       }}},
      {"drift_bias", {[](const RunConfig& c) { return format_exact(c.drift_bias); },
                      [](RunConfig& c, const std::string& v) { c.drift_bias = parse_real("drift_bias", v); }}},
      {"layers", engine_count(&EngineConfig::layers)},
      {"hidden", engine_count(&EngineConfig::hidden)},
      {"time_step", engine_count(&EngineConfig::time_step)},
      {"input_size", engine_count(&EngineConfig::input_size)},
      {"learning_rate", engine_real(&EngineConfig::learning_rate)},
      {"batch_size", engine_count(&EngineConfig::batch_size)},
      {"epochs", engine_count(&EngineConfig::epochs)},
      {"train_months", engine_count(&EngineConfig::train_months)},
      {"validation_months", engine_count(&EngineConfig::validation_months)},
      {"n_ad", engine_count(&EngineConfig::n_ad)},
      {"k_similar", engine_count(&EngineConfig::k_similar)},
      {"finetune_epochs", engine_count(&EngineConfig::finetune_epochs)},
      {"finetune_batch", engine_count(&EngineConfig::finetune_batch)},
      {"finetune_learning_rate", engine_real(&EngineConfig::finetune_learning_rate)},
      {"c_max", engine_count(&EngineConfig::c_max)},
      {"knn_k", engine_count(&EngineConfig::knn_k)},
      {"replay_days", count_field(&RunConfig::replay_days)},
      {"sweep_supp_sizes", {[](const RunConfig& c) { return join(c.sweep_supp_sizes); },
                            [](RunConfig& c, const std::string& v) {
                              c.sweep_supp_sizes = parse_list("sweep_supp_sizes", v);
                            }}},
      {"sweep_hidden_units", {[](const RunConfig& c) { return join(c.sweep_hidden_units); },
                              [](RunConfig& c, const std::string& v) {
                                c.sweep_hidden_units = parse_list("sweep_hidden_units", v);
                              }}},
      {"gradcheck_step", {[](const RunConfig& c) { return format_exact(c.gradcheck_step); },
                          [](RunConfig& c, const std::string& v) { c.gradcheck_step = parse_real("", v); }}},
      {"gradcheck_tolerance", {[](const RunConfig& c) { return format_exact(c.gradcheck_tolerance); },
                               [](RunConfig& c, const std::string& v) {
                                 c.gradcheck_tolerance = parse_real("", v);
                               }}},
  };
  return fields;
}

}  // namespace detail

/// Sets one key; unknown keys and malformed values are configuration errors.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : detail::config_fields()) {
    if (name != key) continue;
    try {
      field.set(cfg, value);
    } catch (const Error& e) {
      throw Error(ErrorKind::configuration, "key '" + key + "': " + e.what());
    }
    return;
  }
  throw Error(ErrorKind::configuration, "unknown key '" + key + "'");
}

inline void write_config(std::ostream& out, const RunConfig& cfg) {
  out << "format_version = " << kConfigVersion << '\n';
  for (const auto& [name, field] : detail::config_fields()) out << name << " = " << field.get(cfg) << '\n';
}

inline std::string config_text(const RunConfig& cfg) {
  std::ostringstream ss;
  write_config(ss, cfg);
  return ss.str();
}

inline void read_config(std::istream& in, RunConfig& cfg, const std::string& source = "<config>") {
  std::string line;
  std::size_t lineno = 0;
  bool versioned = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::configuration, source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(detail::trim(text.substr(0, eq)));
    const std::string value(detail::trim(text.substr(eq + 1)));
    if (key == "format_version") {
      if (value != std::to_string(kConfigVersion)) {
        throw Error(ErrorKind::configuration, source + ": unsupported format_version " + value);
      }
      versioned = true;
      continue;
    }
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      throw Error(ErrorKind::configuration, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!versioned) throw Error(ErrorKind::configuration, source + ": missing format_version");
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
  RunConfig cfg;
  read_config(in, cfg, path);
  return cfg;
}

/// Applies ADLSTM_<KEY> variables, e.g. ADLSTM_HIDDEN=16.
inline void apply_environment(RunConfig& cfg, const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  for (const auto& entry : detail::config_fields()) {
    std::string var = "ADLSTM_";
    for (char ch : entry.first) var += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = getenv_fn(var.c_str())) set_config_value(cfg, entry.first, v);
  }
}

/// 64-bit FNV-1a of the serialized configuration, as 16 hex digits. The
/// output directory is left out: it does not change any result.
inline std::string config_hash(const RunConfig& cfg) {
  RunConfig hashed = cfg;
  hashed.out_dir.clear();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : config_text(hashed)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace adlstm
