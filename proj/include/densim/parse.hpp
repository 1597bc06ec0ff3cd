#pragma once

#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace densim::io {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Keeps empty fields so column counts stay meaningful.
inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

[[noreturn]] inline void fail_at(const std::string& where, std::size_t line, const std::string& what) {
  throw ParseError(where + " line " + std::to_string(line) + ": " + what);
}

inline double to_double(const std::string& s, const std::string& where, std::size_t line,
                        const char* field) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail_at(where, line, std::string("bad ") + field + " '" + s + "'");
  return v;
}

inline long long to_int(const std::string& s, const std::string& where, std::size_t line,
                        const char* field) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail_at(where, line, std::string("bad ") + field + " '" + s + "'");
  return v;
}

}  // namespace densim::io
