#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "stylebench/error.hpp"
#include "stylebench/http_util.hpp"
#include "stylebench/image.hpp"
#include "stylebench/image_io.hpp"
#include "stylebench/timing.hpp"

namespace stylebench {

struct GenRequest {
  std::string prompt;
  int width = 1024;
  int height = 1024;
  std::string model = "dall-e-3";
  std::uint64_t seed = 0;  // mock generator only

  void validate() const {
    if (prompt.empty()) throw Error(ErrorCode::invalid_argument, "prompt must be non-empty");
    if (width < 16 || height < 16) {
      throw Error(ErrorCode::invalid_argument, "generation size must be at least 16x16");
    }
  }

  std::string size_string() const { return std::to_string(width) + "x" + std::to_string(height); }
};

enum class SourceKind { generated, mock, file };

inline constexpr std::string_view to_string(SourceKind k) noexcept {
  switch (k) {
    case SourceKind::generated: return "generated";
    case SourceKind::mock: return "mock";
    case SourceKind::file: return "file";
  }
  return "unknown";
}

struct GeneratedSource {
  GenRequest request;
};
struct MockSource {
  GenRequest request;
};
struct FileSource {
  std::filesystem::path path;
};

/// Where a style image comes from: the remote generator, the offline mock,
/// or a file on disk.
struct StyleSource {
  std::variant<GeneratedSource, MockSource, FileSource> value;

  static StyleSource generated(GenRequest r) { return {GeneratedSource{std::move(r)}}; }
  static StyleSource mock(GenRequest r) { return {MockSource{std::move(r)}}; }
  static StyleSource file(std::filesystem::path p) { return {FileSource{std::move(p)}}; }

  SourceKind kind() const noexcept { return static_cast<SourceKind>(value.index()); }
};

struct ClientConfig {
  std::string base_url = "https://api.openai.com/v1";
  /// Name of the environment variable holding the API key.
  std::string credential_env = "OPENAI_API_KEY";
  double timeout = 120.0;
};

struct GenResult {
  RasterImage style_image;
  double acquisition_time = 0.0;
  SourceKind source_kind = SourceKind::file;
};

// ---------------------------------------------------------------------------
// Base64

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

/// Strict RFC 4648 decoding. Line breaks are skipped; anything else outside
/// the alphabet, bad padding or a length that is not a multiple of four is
/// malformed.
inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  auto value_of = [](char ch) -> int {
    if (ch >= 'A' && ch <= 'Z') return ch - 'A';
    if (ch >= 'a' && ch <= 'z') return ch - 'a' + 26;
    if (ch >= '0' && ch <= '9') return ch - '0' + 52;
    if (ch == '+') return 62;
    if (ch == '/') return 63;
    return -1;
  };
  std::string clean;
  clean.reserve(text.size());
  for (char ch : text) {
    if (ch != '\n' && ch != '\r') clean += ch;
  }
  if (clean.empty() || clean.size() % 4 != 0) {
    throw Error(ErrorCode::malformed_base64, "length " + std::to_string(clean.size()) +
                                                 " is not a positive multiple of 4");
  }
  std::vector<std::uint8_t> out;
  out.reserve(clean.size() / 4 * 3);
  for (std::size_t i = 0; i < clean.size(); i += 4) {
    const bool last = i + 4 == clean.size();
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char ch = clean[i + k];
      if (ch == '=') {
        if (!last || k < 2) throw Error(ErrorCode::malformed_base64, "misplaced padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw Error(ErrorCode::malformed_base64, "data after padding");
      const int d = value_of(ch);
      if (d < 0) throw Error(ErrorCode::malformed_base64, "invalid character in payload");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Offline mock generator

/// FNV-1a, 64-bit.
inline std::uint64_t hash64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform [0, 1) from the top 53 bits; avoids the implementation-defined
// sequences of <random> distributions.
inline double unit_double(std::mt19937_64& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double smoothstep(double t) noexcept { return t * t * (3.0 - 2.0 * t); }

/// Lattice of `cells + 1` squared random values, sampled with smoothed
/// bilinear interpolation.
class ValueNoise {
 public:
  ValueNoise(int cells, std::mt19937_64& rng) : cells_(cells), lattice_((cells + 1) * (cells + 1)) {
    for (double& v : lattice_) v = unit_double(rng);
  }

  /// u, v in [0, 1].
  double sample(double u, double v) const noexcept {
    const double fx = u * cells_;
    const double fy = v * cells_;
    const int x0 = std::min(static_cast<int>(fx), cells_ - 1);
    const int y0 = std::min(static_cast<int>(fy), cells_ - 1);
    const double tx = smoothstep(fx - x0);
    const double ty = smoothstep(fy - y0);
    const double a = at(x0, y0) * (1 - tx) + at(x0 + 1, y0) * tx;
    const double b = at(x0, y0 + 1) * (1 - tx) + at(x0 + 1, y0 + 1) * tx;
    return a * (1 - ty) + b * ty;
  }

 private:
  double at(int x, int y) const noexcept { return lattice_[static_cast<std::size_t>(y) * (cells_ + 1) + x]; }
  int cells_;
  std::vector<double> lattice_;
};

}  // namespace detail

/// Deterministic procedural style image: two octaves of value noise seeded by
/// hash64(prompt) ^ seed, mapped through a 4-colour palette derived from the
/// prompt hash.
inline RasterImage mock_generate(std::string_view prompt, std::uint64_t seed, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::invalid_argument, "mock size must be >= 1");
  const std::uint64_t prompt_hash = hash64(prompt);

  std::array<std::array<double, 3>, 4> palette{};
  std::uint64_t palette_state = prompt_hash;
  for (auto& color : palette) {
    const std::uint64_t bits = detail::splitmix64(palette_state);
    for (int c = 0; c < 3; ++c) color[c] = static_cast<double>((bits >> (8 * c)) & 0xFF);
  }

  std::mt19937_64 rng(prompt_hash ^ seed);
  const detail::ValueNoise coarse(4, rng);
  const detail::ValueNoise fine(16, rng);

  RasterImage img(width, height, 3);
  const double du = width > 1 ? 1.0 / (width - 1) : 0.0;
  const double dv = height > 1 ? 1.0 / (height - 1) : 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = x * du;
      const double v = y * dv;
      const double t = std::clamp(0.7 * coarse.sample(u, v) + 0.3 * fine.sample(u, v), 0.0, 1.0);
      const double pos = t * 3.0;
      const int lo = std::min(static_cast<int>(pos), 2);
      const double frac = pos - lo;
      for (int c = 0; c < 3; ++c) {
        const double value = palette[lo][c] * (1.0 - frac) + palette[lo + 1][c] * frac;
        img.at(x, y, c) = detail::round_to_u8(value);
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Remote payloads

struct ImagePayload {
  enum class Kind { b64, url } kind = Kind::b64;
  std::string value;
};

/// Decodes a b64_json payload, or fetches and decodes a url payload.
inline RasterImage decode_image_payload(const ImagePayload& payload, double timeout = 120.0) {
  if (payload.kind == ImagePayload::Kind::b64) {
    return decode_image(base64_decode(payload.value), "b64 payload");
  }
  detail::SplitUrl url;
  try {
    url = detail::split_url(payload.value);
  } catch (const Error& e) {
    throw Error(ErrorCode::fetch_error, e.what());
  }
  auto client = detail::make_client(url.origin, timeout);
  const auto res = client->Get(url.path);
  if (!res) {
    throw Error(ErrorCode::fetch_error, payload.value + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::fetch_error, payload.value + ": HTTP " + std::to_string(res->status));
  }
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(res->body.data());
  return decode_image({bytes, res->body.size()}, payload.value);
}

namespace detail {

inline std::optional<double> parse_retry_after(const httplib::Response& res) {
  if (!res.has_header("Retry-After")) return std::nullopt;
  const std::string value = res.get_header_value("Retry-After");
  char* end = nullptr;
  const double secs = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || secs < 0.0) return std::nullopt;  // HTTP-date form is not used by the API
  return secs;
}

inline RasterImage generate_remote(const GenRequest& request, const ClientConfig& config) {
  request.validate();
  const char* key = config.credential_env.empty() ? nullptr : std::getenv(config.credential_env.c_str());
  if (!key || !*key) {
    throw Error(ErrorCode::auth_error,
                "credential environment variable " + config.credential_env + " is not set");
  }
  const SplitUrl url = split_url(config.base_url);
  const nlohmann::json body = {
      {"model", request.model},
      {"prompt", request.prompt},
      {"size", request.size_string()},
      {"response_format", "b64_json"},
      {"n", 1},
  };
  auto client = make_client(url.origin, config.timeout);
  const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  const auto res = client->Post(join_path(url.path, "/images/generations"), headers, body.dump(),
                                "application/json");
  if (!res) {
    throw Error(ErrorCode::remote_error, config.base_url + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(ErrorCode::auth_error, "images endpoint rejected the credential (HTTP " +
                                           std::to_string(res->status) + ")");
  }
  if (res->status == 429) {
    const auto retry = parse_retry_after(*res);
    throw Error(ErrorCode::rate_limited,
                "images endpoint rate limited the request" +
                    (retry ? " (retry after " + std::to_string(*retry) + " s)" : std::string()),
                retry);
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::remote_error, "images endpoint returned HTTP " + std::to_string(res->status));
  }

  ImagePayload payload;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    const auto& first = doc.at("data").at(0);
    if (first.contains("b64_json") && first["b64_json"].is_string()) {
      payload = {ImagePayload::Kind::b64, first["b64_json"].get<std::string>()};
    } else if (first.contains("url") && first["url"].is_string()) {
      payload = {ImagePayload::Kind::url, first["url"].get<std::string>()};
    } else {
      throw Error(ErrorCode::remote_error, "response item has neither b64_json nor url");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::remote_error, std::string("malformed response body: ") + e.what());
  }
  return decode_image_payload(payload, config.timeout);
}

}  // namespace detail

/// Obtains a style image from `source`, timing the whole acquisition.
inline GenResult acquire_style(const StyleSource& source, const ClientConfig& config = {}) {
  GenResult result;
  result.source_kind = source.kind();
  const Stopwatch clock;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FileSource>) {
          result.style_image = load_image(s.path);
        } else if constexpr (std::is_same_v<T, MockSource>) {
          s.request.validate();
          result.style_image = mock_generate(s.request.prompt, s.request.seed, s.request.width, s.request.height);
        } else {
          result.style_image = detail::generate_remote(s.request, config);
        }
      },
      source.value);
  result.acquisition_time = clock.elapsed_seconds();
  return result;
}

}  // namespace stylebench
