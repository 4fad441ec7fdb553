// Line-oriented `key = value` text with dotted keys.
//
//   # comment
//   seed = 3
//   mission.altitude_setpoint_m = 2.25
//   [touchdown]            # prefixes the keys that follow
//   reach_m = 0.3
//
// Keys are kept sorted, so serialization is canonical.
#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <system_error>

#include "perchsim/common.hpp"

namespace perchsim::config {

using KeyValues = std::map<std::string, std::string, std::less<>>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline bool valid_key(std::string_view k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return k.find("..") == std::string_view::npos;
}

}  // namespace detail

inline KeyValues parse_text(std::string_view text) {
  KeyValues out;
  std::string section;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      const std::string_view name = detail::trim(line.substr(1, line.size() - 2));
      if (!name.empty() && !detail::valid_key(name)) throw ConfigError(where + "bad section name");
      section = name.empty() ? std::string{} : std::string(name) + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (!detail::valid_key(key)) throw ConfigError(where + "bad key '" + std::string(key) + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + std::string(key) + "'");
    std::string full = section + std::string(key);
    if (out.contains(full)) throw ConfigError(where + "duplicate key '" + full + "'");
    out.emplace(std::move(full), std::string(value));
  }
  return out;
}

inline std::string serialize(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

/// Shortest decimal that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError("'" + std::string(key) + "' needs a finite number, got '" + std::string(text) + "'");
  return v;
}

template <class Int>
Int parse_integer(std::string_view key, std::string_view text) {
  Int v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ConfigError("'" + std::string(key) + "' needs an integer, got '" + std::string(text) + "'");
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("'" + std::string(key) + "' needs true or false");
}

}  // namespace perchsim::config
