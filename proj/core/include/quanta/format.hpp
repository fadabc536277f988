#pragma once

#include <charconv>
#include <string>

namespace quanta {

// Locale-independent float formatting via std::to_chars.

// 17 significant digits: round-trips any f64 in CSV payloads.
inline std::string format_g17(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Shortest representation that round-trips; used for human-facing labels.
inline std::string format_compact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed decimals; used for SVG coordinates so output bytes are stable.
inline std::string format_fixed(double v, int precision) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

}  // namespace quanta
