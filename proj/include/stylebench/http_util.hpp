#pragma once

#include <memory>
#include <string>

#include "httplib.h"
#include "stylebench/error.hpp"

namespace stylebench::detail {

/// "https://host:port/v1/x" -> {"https://host:port", "/v1/x"}.
struct SplitUrl {
  std::string origin;
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "URL has no scheme: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::invalid_argument, "unsupported URL scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = url;
    out.path = "/";
  } else {
    out.origin = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  if (out.origin.size() <= scheme_end + 3) {
    throw Error(ErrorCode::invalid_argument, "URL has no host: " + url);
  }
  return out;
}

inline std::string join_path(const std::string& base, const std::string& suffix) {
  if (base.empty() || base == "/") return suffix;
  if (base.back() == '/') return base.substr(0, base.size() - 1) + suffix;
  return base + suffix;
}

inline std::unique_ptr<httplib::Client> make_client(const std::string& origin, double timeout_seconds) {
  auto client = std::make_unique<httplib::Client>(origin);
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client->set_connection_timeout(secs, usecs);
  client->set_read_timeout(secs, usecs);
  client->set_write_timeout(secs, usecs);
  client->set_follow_location(true);
  return client;
}

inline bool is_timeout(httplib::Error err) {
  return err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
         err == httplib::Error::Write;
}

}  // namespace stylebench::detail
