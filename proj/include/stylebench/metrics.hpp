#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stylebench/error.hpp"
#include "stylebench/image.hpp"

namespace stylebench {

/// SSIM stabiliser constants. C1 = (K1 L)^2, C2 = (K2 L)^2.
struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
  int window_size = 11;

  double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }

  void validate() const {
    if (!(k1 > 0.0) || !(k2 > 0.0) || !(dynamic_range > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "SSIM constants K1, K2 and L must be positive");
    }
    if (window_size < 3 || window_size % 2 == 0) {
      throw Error(ErrorCode::invalid_argument, "SSIM window size must be odd and >= 3");
    }
  }
};

enum class SsimVariant { global, windowed };

inline constexpr std::string_view to_string(SsimVariant v) noexcept {
  return v == SsimVariant::global ? "global" : "windowed";
}

/// PSNR in decibels, or the explicit "identical inputs" sentinel. The
/// sentinel never turns into a floating-point infinity.
class Psnr {
 public:
  static Psnr infinite() noexcept { return Psnr(); }
  static Psnr decibels(double db) noexcept { return Psnr(db); }

  bool is_infinite() const noexcept { return !db_.has_value(); }
  /// Only meaningful when !is_infinite().
  double db() const noexcept { return db_.value_or(0.0); }
  std::optional<double> value() const noexcept { return db_; }

  bool operator==(const Psnr&) const = default;

 private:
  Psnr() = default;
  explicit Psnr(double db) : db_(db) {}
  std::optional<double> db_;
};

struct LossBreakdown {
  double content_loss = 0.0;
  double style_loss = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double total = 0.0;
};

struct MetricReport {
  double ssim = 0.0;
  SsimVariant ssim_variant = SsimVariant::global;
  Psnr psnr = Psnr::infinite();
  double mse = 0.0;
  std::optional<LossBreakdown> loss;
};

namespace detail {

inline void require_same_shape(const LumaPlane& x, const LumaPlane& y) {
  if (!x.same_shape(y)) {
    throw Error(ErrorCode::dimension_mismatch,
                std::to_string(x.width()) + "x" + std::to_string(x.height()) + " vs " +
                    std::to_string(y.width()) + "x" + std::to_string(y.height()));
  }
}

inline double ssim_from_moments(double mu_x, double mu_y, double var_x, double var_y,
                                double cov_xy, double c1, double c2) noexcept {
  const double num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2);
  const double den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
  return num / den;
}

}  // namespace detail

/// (1/mn) * sum (x - y)^2
inline double mse(const LumaPlane& x, const LumaPlane& y) {
  detail::require_same_shape(x, y);
  const auto a = x.data();
  const auto b = y.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

inline Psnr psnr_from_mse(double mse_value, double max_i = 255.0) {
  if (!(max_i > 0.0)) throw Error(ErrorCode::invalid_argument, "PSNR peak value must be positive");
  if (mse_value == 0.0) return Psnr::infinite();
  return Psnr::decibels(10.0 * std::log10((max_i * max_i) / mse_value));
}

inline Psnr psnr(const LumaPlane& x, const LumaPlane& y, double max_i = 255.0) {
  return psnr_from_mse(mse(x, y), max_i);
}

/// SSIM evaluated once over whole-image moments (population convention).
inline double ssim_global(const LumaPlane& x, const LumaPlane& y, const SsimParams& params = {}) {
  detail::require_same_shape(x, y);
  params.validate();
  if (x.size() < 2) throw Error(ErrorCode::invalid_argument, "SSIM needs at least 2 pixels");
  const auto a = x.data();
  const auto b = y.data();
  const double n = static_cast<double>(a.size());

  double sum_x = 0.0;
  double sum_y = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum_x += a[i];
    sum_y += b[i];
  }
  const double mu_x = sum_x / n;
  const double mu_y = sum_y / n;
  double vx = 0.0;
  double vy = 0.0;
  double cxy = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i] - mu_x;
    const double dy = b[i] - mu_y;
    vx += dx * dx;
    vy += dy * dy;
    cxy += dx * dy;
  }
  return detail::ssim_from_moments(mu_x, mu_y, vx / n, vy / n, cxy / n, params.c1(), params.c2());
}

/// Mean of the SSIM statistic over every fully contained square window
/// (uniform weights, stride 1).
///
/// Window moments come from separable box sums: each output element is a
/// direct sum of `window_size` terms, so there is no running-sum drift on
/// large images.
inline double ssim_windowed(const LumaPlane& x, const LumaPlane& y, const SsimParams& params = {}) {
  detail::require_same_shape(x, y);
  params.validate();
  const int w = params.window_size;
  if (x.width() < w || x.height() < w) {
    throw Error(ErrorCode::image_smaller_than_window,
                std::to_string(x.width()) + "x" + std::to_string(x.height()) +
                    " is smaller than window " + std::to_string(w));
  }
  const int width = x.width();
  const int height = x.height();
  const int out_w = width - w + 1;
  const int out_h = height - w + 1;
  const auto a = x.data();
  const auto b = y.data();

  // Five horizontal box-sum maps: x, y, x^2, y^2, xy.
  const std::size_t hsize = static_cast<std::size_t>(out_w) * height;
  std::vector<double> hx(hsize), hy(hsize), hxx(hsize), hyy(hsize), hxy(hsize);
  for (int r = 0; r < height; ++r) {
    const std::size_t row = static_cast<std::size_t>(r) * width;
    for (int c = 0; c < out_w; ++c) {
      double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int k = 0; k < w; ++k) {
        const double va = a[row + c + k];
        const double vb = b[row + c + k];
        sx += va;
        sy += vb;
        sxx += va * va;
        syy += vb * vb;
        sxy += va * vb;
      }
      const std::size_t i = static_cast<std::size_t>(r) * out_w + c;
      hx[i] = sx;
      hy[i] = sy;
      hxx[i] = sxx;
      hyy[i] = syy;
      hxy[i] = sxy;
    }
  }

  const double n = static_cast<double>(w) * w;
  const double c1 = params.c1();
  const double c2 = params.c2();
  double total = 0.0;
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int k = 0; k < w; ++k) {
        const std::size_t i = static_cast<std::size_t>(r + k) * out_w + c;
        sx += hx[i];
        sy += hy[i];
        sxx += hxx[i];
        syy += hyy[i];
        sxy += hxy[i];
      }
      const double mu_x = sx / n;
      const double mu_y = sy / n;
      // Not clamped: for x == y, var and cov must stay bit-identical.
      const double var_x = sxx / n - mu_x * mu_x;
      const double var_y = syy / n - mu_y * mu_y;
      const double cov = sxy / n - mu_x * mu_y;
      total += detail::ssim_from_moments(mu_x, mu_y, var_x, var_y, cov, c1, c2);
    }
  }
  return total / (static_cast<double>(out_w) * out_h);
}

inline double ssim(const LumaPlane& x, const LumaPlane& y, SsimVariant variant,
                   const SsimParams& params = {}) {
  return variant == SsimVariant::global ? ssim_global(x, y, params) : ssim_windowed(x, y, params);
}

/// Statistical stand-in for a perceptual style-transfer loss.
///
/// The content term is the luma MSE between the content image (resampled to
/// the stylized size) and the stylized image. The style term is the mean
/// squared difference of per-channel means and standard deviations between
/// the style and stylized images.
inline LossBreakdown style_transfer_loss(const RasterImage& content, const RasterImage& style,
                                         const RasterImage& stylized, double alpha = 1.0,
                                         double beta = 1.0) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "loss weights must be non-negative");
  }
  if (stylized.empty() || content.empty() || style.empty()) {
    throw Error(ErrorCode::invalid_argument, "loss inputs must be non-empty");
  }
  if (style.channels() != stylized.channels()) {
    throw Error(ErrorCode::channel_count_mismatch,
                "style has " + std::to_string(style.channels()) + " channels, stylized has " +
                    std::to_string(stylized.channels()));
  }
  const RasterImage aligned = resize_bilinear(content, stylized.width(), stylized.height());

  LossBreakdown loss;
  loss.alpha = alpha;
  loss.beta = beta;
  loss.content_loss = mse(to_luma(aligned), to_luma(stylized));

  const ChannelStats s = channel_stats(style);
  const ChannelStats t = channel_stats(stylized);
  double sq = 0.0;
  for (int c = 0; c < s.channels(); ++c) {
    const double dm = s.mean[c] - t.mean[c];
    const double ds = s.stddev[c] - t.stddev[c];
    sq += dm * dm + ds * ds;
  }
  loss.style_loss = sq / (2.0 * s.channels());
  loss.total = alpha * loss.content_loss + beta * loss.style_loss;
  return loss;
}

struct MeasureOptions {
  SsimVariant variant = SsimVariant::global;
  SsimParams params{};
  double max_i = 255.0;
};

struct Measurement {
  MetricReport report;
  bool reference_resized = false;
};

/// Full-reference comparison of two rasters on luma. The reference is
/// resampled to the candidate's size when they differ; the flag records it.
inline Measurement measure(const RasterImage& reference, const RasterImage& candidate,
                           const MeasureOptions& options = {}) {
  Measurement m;
  const bool resize = reference.width() != candidate.width() || reference.height() != candidate.height();
  const LumaPlane ref = to_luma(resize ? resize_bilinear(reference, candidate.width(), candidate.height())
                                       : reference);
  const LumaPlane cand = to_luma(candidate);
  m.reference_resized = resize;
  m.report.mse = mse(ref, cand);
  m.report.psnr = psnr_from_mse(m.report.mse, options.max_i);
  m.report.ssim_variant = options.variant;
  m.report.ssim = ssim(ref, cand, options.variant, options.params);
  return m;
}

}  // namespace stylebench
