#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace dcopt::detail {

// Shortest text that reads back to the same double ("130", "168.4").
inline std::string format_number(double value) {
  if (std::isnan(value)) return "NaN";
  if (value == 0.0) return "0";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

}  // namespace dcopt::detail
