#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stylebench {

enum class ErrorCode {
  invalid_argument,
  file_not_found,
  unsupported_format,
  corrupt_data,
  io_failure,
  dimension_mismatch,
  image_smaller_than_window,
  channel_count_mismatch,
  backend_unavailable,
  backend_timeout,
  backend_protocol_error,
  auth_error,
  rate_limited,
  remote_error,
  malformed_base64,
  fetch_error,
  empty_input,
  empty_aggregate,
  parse_error,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::file_not_found: return "file-not-found";
    case ErrorCode::unsupported_format: return "unsupported-format";
    case ErrorCode::corrupt_data: return "corrupt-data";
    case ErrorCode::io_failure: return "io-failure";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::image_smaller_than_window: return "image-smaller-than-window";
    case ErrorCode::channel_count_mismatch: return "channel-count-mismatch";
    case ErrorCode::backend_unavailable: return "backend-unavailable";
    case ErrorCode::backend_timeout: return "backend-timeout";
    case ErrorCode::backend_protocol_error: return "backend-protocol-error";
    case ErrorCode::auth_error: return "auth-error";
    case ErrorCode::rate_limited: return "rate-limited";
    case ErrorCode::remote_error: return "remote-error";
    case ErrorCode::malformed_base64: return "malformed-base64";
    case ErrorCode::fetch_error: return "fetch-error";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::empty_aggregate: return "empty-aggregate";
    case ErrorCode::parse_error: return "parse-error";
  }
  return "unknown";
}

/// Every failure in the library surfaces as this exception. The message is
/// prefixed with the error code name so it is meaningful on its own.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Error(ErrorCode code, const std::string& message, std::optional<double> retry_after)
      : Error(code, message) {
    retry_after_ = retry_after;
  }

  ErrorCode code() const noexcept { return code_; }

  /// Seconds advertised by a rate-limited remote, if it sent one.
  std::optional<double> retry_after() const noexcept { return retry_after_; }

 private:
  ErrorCode code_;
  std::optional<double> retry_after_;
};

}  // namespace stylebench
