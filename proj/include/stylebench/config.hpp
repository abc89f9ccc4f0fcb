#pragma once

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "stylebench/error.hpp"

namespace stylebench {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

/// Flat `key = value` text. `#` starts a comment line; blank lines are
/// ignored; surrounding double quotes on a value are stripped.
inline KeyValues parse_config_text(std::string_view text, const std::string& origin = "<config>") {
  KeyValues out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::parse_error, origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::parse_error, origin + ":" + std::to_string(line_no) + ": empty key");
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    out[std::move(key)] = std::move(value);
  }
  return out;
}

inline KeyValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::file_not_found, path.string() + ": cannot open config file");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path.string());
}

/// `style-file` -> `STYLEBENCH_STYLE_FILE`.
inline std::string env_name_for(std::string_view key) {
  std::string out = "STYLEBENCH_";
  for (char ch : key) {
    out += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

/// Layered settings lookup: flags > config file > environment > defaults.
class SettingsResolver {
 public:
  SettingsResolver(KeyValues flags, KeyValues config_file)
      : flags_(std::move(flags)), file_(std::move(config_file)) {}

  std::optional<std::string> lookup(const std::string& key) const {
    if (auto it = flags_.find(key); it != flags_.end()) return it->second;
    if (auto it = file_.find(key); it != file_.end()) return it->second;
    if (const char* env = std::getenv(env_name_for(key).c_str()); env && *env) return std::string(env);
    return std::nullopt;
  }

  /// Resolves `key` and records the value in the snapshot.
  std::string get(const std::string& key, const std::string& fallback) {
    std::string v = lookup(key).value_or(fallback);
    resolved_[key] = v;
    return v;
  }

  std::optional<std::string> get_optional(const std::string& key) {
    auto v = lookup(key);
    if (v) resolved_[key] = *v;
    return v;
  }

  bool get_flag(const std::string& key, bool fallback) {
    const std::string v = get(key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
      resolved_[key] = "true";
      return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
      resolved_[key] = "false";
      return false;
    }
    throw Error(ErrorCode::invalid_argument, key + " must be a boolean, got '" + v + "'");
  }

  long get_int(const std::string& key, long fallback) {
    const std::string v = get(key, std::to_string(fallback));
    char* end = nullptr;
    const long out = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0') {
      throw Error(ErrorCode::invalid_argument, key + " must be an integer, got '" + v + "'");
    }
    return out;
  }

  double get_double(const std::string& key, double fallback) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), fallback);
    const std::string v = get(key, std::string(buf, res.ptr));
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') {
      throw Error(ErrorCode::invalid_argument, key + " must be a number, got '" + v + "'");
    }
    return out;
  }

  /// Every key resolved so far with its effective value.
  const KeyValues& snapshot() const noexcept { return resolved_; }

 private:
  KeyValues flags_;
  KeyValues file_;
  KeyValues resolved_;
};

}  // namespace stylebench
