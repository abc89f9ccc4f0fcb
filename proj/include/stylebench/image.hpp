#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stylebench/error.hpp"

namespace stylebench {

/// 8-bit interleaved raster, row-major. Channel count is 1 (gray), 3 (RGB)
/// or 4 (RGBA).
class RasterImage {
 public:
  RasterImage() = default;

  RasterImage(int width, int height, int channels)
      : RasterImage(width, height, channels,
                    std::vector<std::uint8_t>(sample_count(width, height, channels), 0)) {}

  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::invalid_argument, "image dimensions must be >= 1");
    }
    if (channels != 1 && channels != 3 && channels != 4) {
      throw Error(ErrorCode::invalid_argument,
                  "channel count must be 1, 3 or 4, got " + std::to_string(channels));
    }
    if (data_.size() != sample_count(width, height, channels)) {
      throw Error(ErrorCode::invalid_argument, "sample buffer length does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }

  bool operator==(const RasterImage&) const = default;

 private:
  static std::size_t sample_count(int w, int h, int c) {
    if (w < 1 || h < 1 || c < 1) return 0;
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c);
  }
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single floating-point channel; the plane every metric works on.
class LumaPlane {
 public:
  LumaPlane() = default;

  LumaPlane(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::invalid_argument, "plane dimensions must be >= 1");
    }
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw Error(ErrorCode::invalid_argument, "plane buffer length does not match dimensions");
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "plane sample is not finite");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }
  double at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)];
  }

  bool same_shape(const LumaPlane& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population convention (1/N)

  int channels() const noexcept { return static_cast<int>(mean.size()); }
};

namespace detail {

inline std::uint8_t round_to_u8(double v) noexcept {
  // half-up, then clamp
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace detail

/// Bilinear resampling with pixel-centre alignment. Source coordinates that
/// fall outside the image are clamped to the border; results are rounded
/// half-up.
inline RasterImage resize_bilinear(const RasterImage& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) {
    throw Error(ErrorCode::invalid_argument, "resize target dimensions must be >= 1");
  }
  if (img.empty()) throw Error(ErrorCode::invalid_argument, "cannot resize an empty image");
  if (new_width == img.width() && new_height == img.height()) return img;

  const int channels = img.channels();
  const double sx = static_cast<double>(img.width()) / new_width;
  const double sy = static_cast<double>(img.height()) / new_height;
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;

  RasterImage out(new_width, new_height, channels);
  for (int y = 0; y < new_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_y);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_x);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
        const double bottom = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = detail::round_to_u8(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

/// Rec.601 luma (0.299 R + 0.587 G + 0.114 B); alpha is ignored and
/// single-channel input passes straight through.
inline LumaPlane to_luma(const RasterImage& img) {
  if (img.empty()) throw Error(ErrorCode::invalid_argument, "cannot convert an empty image");
  const auto src = img.data();
  const std::size_t n = img.pixel_count();
  std::vector<double> out(n);
  if (img.channels() == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = src[i];
  } else {
    const std::size_t stride = static_cast<std::size_t>(img.channels());
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t* p = src.data() + i * stride;
      // Integer weights keep grey exact and white at exactly 255.
      const int weighted = 299 * p[0] + 587 * p[1] + 114 * p[2];
      out[i] = weighted / 1000.0;
    }
  }
  return LumaPlane(img.width(), img.height(), std::move(out));
}

/// Per-channel mean and population standard deviation over all pixels.
inline ChannelStats channel_stats(const RasterImage& img) {
  if (img.empty()) throw Error(ErrorCode::invalid_argument, "cannot compute stats of an empty image");
  const int channels = img.channels();
  const std::size_t n = img.pixel_count();
  const auto src = img.data();

  ChannelStats stats;
  stats.mean.assign(static_cast<std::size_t>(channels), 0.0);
  stats.stddev.assign(static_cast<std::size_t>(channels), 0.0);
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += src[i * channels + c];
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = src[i * channels + c] - mean;
      sq += d * d;
    }
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(sq / static_cast<double>(n));
  }
  return stats;
}

}  // namespace stylebench
