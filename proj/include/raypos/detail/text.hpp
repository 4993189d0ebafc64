#pragma once

// Text helpers shared by the file formats. All floating-point output goes
// through fmt_double so round-trips are bit-exact (%.17g).

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "raypos/errors.hpp"

namespace raypos::detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(context + ": not a number: '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& context) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(context + ": not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace raypos::detail
