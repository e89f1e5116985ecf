#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

#include "robstat/error.hpp"

namespace robstat {

// Round-trip decimal rendering (17 significant digits, trailing zeros trimmed).
// Used for every number written to CSV and measure files so outputs are
// byte-stable across runs.
inline std::string format_double(double x) {
  if (x == 0.0) return "0";  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    fail(ErrorKind::invalid_argument, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace robstat
