#pragma once

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <thread>

#include "stylebench/error.hpp"
#include "stylebench/http_util.hpp"
#include "stylebench/image.hpp"
#include "stylebench/image_io.hpp"
#include "stylebench/timing.hpp"

extern char** environ;

namespace stylebench {

enum class StylizerBackend { statistical, external };

inline constexpr std::string_view to_string(StylizerBackend b) noexcept {
  return b == StylizerBackend::statistical ? "statistical" : "external";
}

inline std::optional<StylizerBackend> parse_backend(std::string_view name) {
  if (name == "statistical") return StylizerBackend::statistical;
  if (name == "external") return StylizerBackend::external;
  return std::nullopt;
}

/// Options understood by the external backend:
///   command   shell command; invoked as `<command> <content> <style> <output>`
///   endpoint  HTTP URL receiving a multipart POST with `content` and `style`
///   timeout   seconds, default 60
///   scratch   directory for exchanged images (default: fresh temp dir)
using BackendOptions = std::map<std::string, std::string>;

inline constexpr double kDefaultBackendTimeout = 60.0;

struct StylizeRequest {
  RasterImage content;
  RasterImage style;
  StylizerBackend backend = StylizerBackend::statistical;
  BackendOptions backend_options;
};

struct StylizeResult {
  RasterImage stylized;
  double style_transfer_time = 0.0;
  StylizerBackend backend_used = StylizerBackend::statistical;
  bool resized_to_content = false;
};

/// Per-channel mean/stddev transfer (Reinhard-style, in RGB). Alpha, when
/// present on the content, is copied through unchanged.
inline RasterImage stylize_statistical(const RasterImage& content, const RasterImage& style) {
  if (content.empty() || style.empty()) {
    throw Error(ErrorCode::invalid_argument, "stylize inputs must be non-empty");
  }
  const int color = content.channels() == 1 ? 1 : 3;
  const int style_color = style.channels() == 1 ? 1 : 3;
  if (color != style_color) {
    throw Error(ErrorCode::channel_count_mismatch,
                "content has " + std::to_string(content.channels()) + " channels, style has " +
                    std::to_string(style.channels()));
  }
  const ChannelStats cs = channel_stats(content);
  const ChannelStats ss = channel_stats(style);

  RasterImage out = content;
  const int channels = content.channels();
  const auto src = content.data();
  auto dst = out.data();
  const std::size_t n = content.pixel_count();
  for (int c = 0; c < color; ++c) {
    const double mu_c = cs.mean[c];
    const double sd_c = cs.stddev[c];
    const double mu_s = ss.mean[c];
    const double sd_s = ss.stddev[c];
    if (sd_c == 0.0) {
      const std::uint8_t v = detail::round_to_u8(mu_s);
      for (std::size_t i = 0; i < n; ++i) dst[i * channels + c] = v;
      continue;
    }
    const double ratio = sd_s / sd_c;
    for (std::size_t i = 0; i < n; ++i) {
      const double in = src[i * channels + c];
      dst[i * channels + c] = detail::round_to_u8((in - mu_c) * ratio + mu_s);
    }
  }
  return out;
}

namespace detail {

/// Temporary directory removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "stylebench-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) {
      throw Error(ErrorCode::io_failure, "cannot create scratch directory");
    }
    path_ = pattern;
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

inline double option_seconds(const BackendOptions& options, const std::string& key, double fallback) {
  const auto it = options.find(key);
  if (it == options.end() || it->second.empty()) return fallback;
  try {
    const double v = std::stod(it->second);
    if (v > 0.0) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::invalid_argument, "option " + key + " must be a positive number");
}

struct ProcessOutcome {
  int exit_status = 0;
  bool timed_out = false;
};

/// Runs `/bin/sh -c '<command> "$@"' sh args...` in its own process group.
/// The child's stdout is redirected to our stderr.
inline ProcessOutcome run_command(const std::string& command, const std::vector<std::string>& args,
                                  double timeout_seconds) {
  const std::string script = command + " \"$@\"";
  std::vector<std::string> argv_storage = {"/bin/sh", "-c", script, "sh"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, STDERR_FILENO, STDOUT_FILENO);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    throw Error(ErrorCode::backend_unavailable, "cannot spawn /bin/sh: " + std::string(std::strerror(rc)));
  }

  ProcessOutcome outcome;
  const Stopwatch clock;
  auto delay = std::chrono::microseconds(200);
  for (;;) {
    int status = 0;
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      outcome.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      return outcome;
    }
    if (done < 0 && errno != EINTR) {
      throw Error(ErrorCode::backend_protocol_error, "waitpid failed: " + std::string(std::strerror(errno)));
    }
    if (clock.elapsed_seconds() >= timeout_seconds) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      outcome.timed_out = true;
      return outcome;
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, std::chrono::microseconds(10000));
  }
}

inline RasterImage decode_backend_reply(std::span<const std::uint8_t> bytes, const std::string& who) {
  try {
    return decode_image(bytes, who);
  } catch (const Error& e) {
    throw Error(ErrorCode::backend_protocol_error, who + ": malformed reply (" + e.what() + ")");
  }
}

struct BackendCall {
  RasterImage image;
  double seconds = 0.0;
};

inline BackendCall call_subprocess_backend(const StylizeRequest& request, const std::string& command,
                                           double timeout) {
  const std::string who = "external command '" + command + "'";
  std::optional<ScratchDir> owned;
  std::filesystem::path dir;
  if (auto it = request.backend_options.find("scratch"); it != request.backend_options.end() &&
                                                         !it->second.empty()) {
    dir = it->second;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
  } else {
    owned.emplace();
    dir = owned->path();
  }
  const auto content_path = dir / "content.png";
  const auto style_path = dir / "style.png";
  const auto out_path = dir / "stylized.png";
  std::error_code ec;
  std::filesystem::remove(out_path, ec);
  save_image(request.content, content_path);
  save_image(request.style, style_path);

  const Stopwatch clock;
  const ProcessOutcome outcome =
      run_command(command, {content_path.string(), style_path.string(), out_path.string()}, timeout);
  const double seconds = clock.elapsed_seconds();

  if (outcome.timed_out) {
    throw Error(ErrorCode::backend_timeout, who + " exceeded " + std::to_string(timeout) + " s");
  }
  if (outcome.exit_status == 126 || outcome.exit_status == 127) {
    throw Error(ErrorCode::backend_unavailable, who + " could not be executed (exit " +
                                                    std::to_string(outcome.exit_status) + ")");
  }
  if (outcome.exit_status != 0) {
    throw Error(ErrorCode::backend_protocol_error,
                who + " exited with status " + std::to_string(outcome.exit_status));
  }
  if (!std::filesystem::is_regular_file(out_path, ec)) {
    throw Error(ErrorCode::backend_protocol_error, who + " produced no " + out_path.filename().string());
  }
  return {decode_backend_reply(read_file_bytes(out_path), who), seconds};
}

inline BackendCall call_http_backend(const StylizeRequest& request, const std::string& endpoint,
                                     double timeout) {
  const std::string who = "external endpoint " + endpoint;
  const SplitUrl url = split_url(endpoint);
  const auto content_png = encode_image(request.content, ImageFormat::png);
  const auto style_png = encode_image(request.style, ImageFormat::png);
  httplib::MultipartFormDataItems items = {
      {"content", std::string(content_png.begin(), content_png.end()), "content.png", "image/png"},
      {"style", std::string(style_png.begin(), style_png.end()), "style.png", "image/png"},
  };
  auto client = make_client(url.origin, timeout);

  const Stopwatch clock;
  const auto res = client->Post(url.path, items);
  const double seconds = clock.elapsed_seconds();

  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Connection) {
      throw Error(ErrorCode::backend_unavailable, who + ": " + httplib::to_string(err));
    }
    if (is_timeout(err) && (err == httplib::Error::ConnectionTimeout || seconds >= 0.9 * timeout)) {
      throw Error(ErrorCode::backend_timeout, who + " exceeded " + std::to_string(timeout) + " s");
    }
    throw Error(ErrorCode::backend_protocol_error, who + ": " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::backend_protocol_error, who + " returned HTTP " + std::to_string(res->status));
  }
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(res->body.data());
  return {decode_backend_reply({bytes, res->body.size()}, who), seconds};
}

}  // namespace detail

/// Sends content and style to an external inference backend and reads back
/// one stylized image. Replies with a different size are resampled to the
/// content size. Timing covers the backend round trip only.
inline StylizeResult stylize_external(const StylizeRequest& request) {
  if (request.content.empty() || request.style.empty()) {
    throw Error(ErrorCode::invalid_argument, "stylize inputs must be non-empty");
  }
  const auto& opts = request.backend_options;
  const double timeout = detail::option_seconds(opts, "timeout", kDefaultBackendTimeout);
  const auto command = opts.find("command");
  const auto endpoint = opts.find("endpoint");

  detail::BackendCall call;
  if (command != opts.end() && !command->second.empty()) {
    call = detail::call_subprocess_backend(request, command->second, timeout);
  } else if (endpoint != opts.end() && !endpoint->second.empty()) {
    call = detail::call_http_backend(request, endpoint->second, timeout);
  } else {
    throw Error(ErrorCode::backend_unavailable, "external backend has neither a command nor an endpoint");
  }

  StylizeResult result;
  result.backend_used = StylizerBackend::external;
  result.style_transfer_time = call.seconds;
  const int w = request.content.width();
  const int h = request.content.height();
  if (call.image.width() != w || call.image.height() != h) {
    result.stylized = resize_bilinear(call.image, w, h);
    result.resized_to_content = true;
  } else {
    result.stylized = std::move(call.image);
  }
  return result;
}

inline StylizeResult stylize(const StylizeRequest& request) {
  if (request.backend == StylizerBackend::external) return stylize_external(request);
  StylizeResult result;
  result.backend_used = StylizerBackend::statistical;
  const Stopwatch clock;
  result.stylized = stylize_statistical(request.content, request.style);
  result.style_transfer_time = clock.elapsed_seconds();
  return result;
}

}  // namespace stylebench
