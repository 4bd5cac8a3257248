#pragma once

// Shared vocabulary: error type, calendar timestamps and exact number formatting.

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace adlstm {

enum class ErrorKind {
  ingestion,
  degenerate_feature,
  parameter,
  shape,
  undefined_metric,
  zero_variance,
  optimizer,
  state_machine,
  insufficient_history,
  configuration,
  adaptation,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ingestion: return "ingestion";
    case ErrorKind::degenerate_feature: return "degenerate-feature";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::shape: return "shape";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::zero_variance: return "zero-variance";
    case ErrorKind::optimizer: return "optimizer";
    case ErrorKind::state_machine: return "state-machine";
    case ErrorKind::insufficient_history: return "insufficient-history";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::adaptation: return "adaptation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (and the CLI
/// exit path) can tell error classes apart without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

using Date = std::chrono::sys_days;

/// Calendar date plus hour of day (0..23).
struct Timestamp {
  Date day{};
  int hour = 0;

  auto operator<=>(const Timestamp&) const = default;
};

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_timestamp(const Timestamp& ts) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "T%02d:00", ts.hour);
  return format_date(ts.day) + buf;
}

/// Parses YYYY-MM-DD. Throws Error(parameter) on malformed or impossible dates.
inline Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto fail = [&] { return Error(ErrorKind::parameter, "bad date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (ec != std::errc{} || p != text.data() + pos + len) throw fail();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw fail();
  return Date{ymd};
}

/// Parses YYYY-MM-DDTHH:00.
inline Timestamp parse_timestamp(std::string_view text) {
  auto fail = [&] { return Error(ErrorKind::parameter, "bad timestamp '" + std::string(text) + "'"); };
  if (text.size() != 16 || text[10] != 'T' || text.substr(13) != ":00") throw fail();
  Timestamp ts;
  ts.day = parse_date(text.substr(0, 10));
  auto [p, ec] = std::from_chars(text.data() + 11, text.data() + 13, ts.hour);
  if (ec != std::errc{} || p != text.data() + 13 || ts.hour < 0 || ts.hour > 23) throw fail();
  return ts;
}

inline Date add_months(Date d, int months) {
  std::chrono::year_month_day ymd{d};
  ymd += std::chrono::months{months};
  if (!ymd.ok()) ymd = ymd.year() / ymd.month() / std::chrono::last;
  return Date{ymd};
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_exact(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

/// Strict full-token double parse; returns false on junk or trailing text.
inline bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && p == text.data() + text.size();
}

inline bool parse_long(std::string_view text, long long& out) {
  if (text.empty()) return false;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && p == text.data() + text.size();
}

}  // namespace adlstm
