#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace bcl::detail {

// Shortest decimal that round-trips to the same double, possibly in
// exponent form ("1e-07").
inline std::string shortest(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

// Plain positional notation, shortest round-trip digits, at least one
// fractional digit: 2.5 -> "2.5", 600 -> "600.0", 0.68 -> "0.68".
inline std::string decimal(double value) {
  if (value == 0.0) value = 0.0;  // fold -0
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (ec != std::errc{}) return "nan";
  std::string out(buf, end);
  if (out.find('.') == std::string::npos) out += ".0";
  return out;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace bcl::detail
